//! Monochromatic reductions to E₁ for almost transitive colorings.
//!
//! For each color `a` the engine builds the partial maps `f^a_i` stage by
//! stage along the filtration `F_i`: `f^a_0(x) = x`, and `f^a_{i+1}(x)` is the
//! ζ-least point above the `F_{i+1}`-class of `x` and above every earlier
//! value collected in `K^a_x` that gets color `a` together with every
//! `(n-1)`-subset of `K^a_x`. A point's emitted prefix is
//! `S(x)(i) = f^b_i(x)` for the least color `b` that survives every stage.

use std::collections::HashMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorings::{sample_almost_transitivity, Color, Coloring, ColoringError, Verdict};
use crate::ramsey::ENGINE_VERSION;
use crate::relspace::{Point, RelError, Space};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("prefixes have different lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("{x} and {y} are not F_{j}-related")]
    NotFiltrationRelated { x: Point, y: Point, j: usize },
    #[error("no color is defined at stage {0} for both points")]
    Incomparable(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error(transparent)]
    Rel(#[from] RelError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum StageStatus {
    Defined { value: Point },
    /// Proven undefined: the coloring provably never takes the color.
    Undefined { certificate: String },
    /// No candidate passed within the stage's fuel.
    FuelExhausted { scanned: u64 },
    /// A value this stage depends on is not defined.
    Blocked { stage: usize },
    /// The color failed at an earlier stage of this point.
    Unreached,
}

impl StageStatus {
    pub fn value(&self) -> Option<&Point> {
        match self {
            StageStatus::Defined { value } => Some(value),
            _ => None,
        }
    }
}

/// The outcome of one stage for one `F_i`-class and color.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub status: StageStatus,
    /// `K^a_x`, ζ-descending.
    pub k: Vec<Point>,
    /// The ζ-maximum of the class and of `K^a_x`; candidates start above it.
    pub floor: Option<Point>,
    pub scanned: u64,
}

/// Computes `f^a_i` values with values shared across `F_i`-classes.
pub struct ReductionEngine<'a> {
    space: &'a Space,
    coloring: &'a Coloring,
    fuel: u64,
    memo: HashMap<(Point, usize, Color), StageRecord>,
    evaluations: u64,
}

impl<'a> ReductionEngine<'a> {
    pub fn new(space: &'a Space, coloring: &'a Coloring, fuel: u64) -> Result<Self, ReductionError> {
        coloring.check()?;
        if coloring.dim() < 2 {
            return Err(ReductionError::InvalidParams("reductions need dimension at least 2".into()));
        }
        Ok(ReductionEngine { space, coloring, fuel, memo: HashMap::new(), evaluations: 0 })
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// `f^a_i(x)`, or the reason it is missing.
    pub fn value(&mut self, a: Color, i: usize, x: &Point) -> Result<StageStatus, ReductionError> {
        if i == 0 {
            self.space.validate(x)?;
            return Ok(StageStatus::Defined { value: x.clone() });
        }
        Ok(self.stage(a, i, x)?.status.clone())
    }

    /// The stage-`i` record for the `F_i`-class of `x` (`i >= 1`).
    pub fn stage(&mut self, a: Color, i: usize, x: &Point) -> Result<&StageRecord, ReductionError> {
        assert!(i >= 1, "stage 0 is the identity");
        let rep = self.space.filtration_rep(i, x)?;
        let key = (rep, i, a);
        if !self.memo.contains_key(&key) {
            let record = self.compute(a, i, &key.0)?;
            self.memo.insert(key.clone(), record);
        }
        Ok(&self.memo[&key])
    }

    fn compute(&mut self, a: Color, i: usize, rep: &Point) -> Result<StageRecord, ReductionError> {
        let space = self.space;
        let mut k = Vec::new();
        for j in 0..i {
            for r in space.filtration_subreps(i, j, rep)? {
                match self.value(a, j, &r)? {
                    StageStatus::Defined { value } => k.push(value),
                    _ => {
                        return Ok(StageRecord { status: StageStatus::Blocked { stage: j }, k: Vec::new(), floor: None, scanned: 0 })
                    }
                }
            }
        }
        // order everything by ζ-distance from the representative
        let mut keyed: Vec<(i128, Point)> = k
            .into_iter()
            .map(|p| Ok((space.zeta_distance(rep, &p)?, p)))
            .collect::<Result<_, RelError>>()?;
        keyed.sort_by_key(|k| std::cmp::Reverse(k.0));
        keyed.dedup_by(|x, y| x.0 == y.0);
        let mut floor = keyed.first().cloned();
        for p in space.filtration_class(i, rep)? {
            let d = space.zeta_distance(rep, &p)?;
            if floor.as_ref().is_none_or(|(m, _)| d > *m) {
                floor = Some((d, p));
            }
        }
        let k: Vec<Point> = keyed.into_iter().map(|(_, p)| p).collect();
        let floor = floor.map(|(_, p)| p).expect("classes are nonempty");

        let n = self.coloring.dim();
        let mut z = floor.clone();
        let mut scanned = 0;
        while scanned < self.fuel {
            z = space.zeta_successor(&z)?;
            scanned += 1;
            if self.passes(&z, &k, n, a)? {
                return Ok(StageRecord { status: StageStatus::Defined { value: z }, k, floor: Some(floor), scanned });
            }
        }
        Ok(StageRecord { status: StageStatus::FuelExhausted { scanned }, k, floor: Some(floor), scanned })
    }

    fn passes(&mut self, z: &Point, k: &[Point], n: usize, a: Color) -> Result<bool, ReductionError> {
        for l in k.iter().combinations(n - 1) {
            let mut set: Vec<&Point> = Vec::with_capacity(n);
            set.push(z);
            set.extend(l);
            self.evaluations += 1;
            if self.coloring.color_refs(self.space, &set)? != a {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Computes stage `i + 1` for `x` and color `a` with a fresh engine.
pub fn stage_advance(
    space: &Space,
    c: &Coloring,
    x: &Point,
    i: usize,
    a: Color,
    fuel: u64,
) -> Result<StageRecord, ReductionError> {
    let mut engine = ReductionEngine::new(space, c, fuel)?;
    Ok(engine.stage(a, i + 1, x)?.clone())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorStage {
    pub color: Color,
    pub status: StageStatus,
    pub k_size: usize,
    /// The full `K^a_x` when it is within the recording limit.
    pub k: Option<Vec<Point>>,
    pub floor: Option<Point>,
    pub scanned: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStage {
    pub index: usize,
    pub colors: Vec<ColorStage>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionOptions {
    pub i_max: usize,
    /// Candidates examined per stage.
    pub fuel: u64,
    /// Scan length of the almost-transitivity precheck; 0 skips it.
    pub precheck_horizon: usize,
    /// `K` sets larger than this are recorded by size only.
    pub k_record_limit: usize,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        ReductionOptions { i_max: 12, fuel: 10_000, precheck_horizon: 64, k_record_limit: 1 << 14 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub base: Point,
    pub backend: Space,
    pub coloring: Coloring,
    pub options: ReductionOptions,
    pub stages: Vec<ReductionStage>,
    pub surviving: Vec<Color>,
    pub chosen: Option<Color>,
    /// `S(x)(0..=i_max)` for the chosen color.
    pub prefix: Vec<Point>,
    /// `S(x)(i) ≠ S(x)(j)` for distinct `i, j`.
    pub within_stream_injective: bool,
    /// The literal reading `S(x)(i) ≠ S(y)(j)` needs a second stream; filled
    /// in by callers that compare traces with [`cross_stream_distinct`].
    pub cross_stream_distinct: Option<bool>,
    /// The invariant's set `{f_j(y) : y ∈ [x]_{F_i}, j < i}` and the stage's
    /// `K` are built from the same index range; recorded for audit.
    pub invariant_set_is_k: bool,
    pub warnings: Vec<String>,
    pub evaluations: u64,
    pub engine_version: String,
}

impl ReductionTrace {
    /// True when some color survived every stage.
    pub fn conclusive(&self) -> bool {
        self.chosen.is_some()
    }
}

fn emptiness_certificate(c: &Coloring, a: Color, k_size: usize) -> Option<String> {
    match c {
        Coloring::Constant { value, n, .. } if *value != a && k_size + 1 >= *n => {
            Some(format!("constant coloring takes only color {value}"))
        }
        _ => None,
    }
}

/// Runs every color through stage `i_max` for `x` and emits the prefix of
/// the least surviving color.
pub fn build_reduction(
    space: &Space,
    c: &Coloring,
    x: &Point,
    options: &ReductionOptions,
) -> Result<ReductionTrace, ReductionError> {
    let mut engine = ReductionEngine::new(space, c, options.fuel)?;
    build_with(&mut engine, x, options)
}

/// [`build_reduction`] on an existing engine, reusing its stage values.
pub fn build_with(engine: &mut ReductionEngine<'_>, x: &Point, options: &ReductionOptions) -> Result<ReductionTrace, ReductionError> {
    let (space, c) = (engine.space, engine.coloring);
    space.zeta_successor(x)?;
    let mut warnings = Vec::new();
    if options.precheck_horizon > 0 {
        let reports = sample_almost_transitivity(space, c, x, options.precheck_horizon)?;
        let persistent = reports.iter().filter(|r| r.verdict == Verdict::Persistent).count();
        if persistent > 0 {
            warnings.push(format!(
                "almost-transitivity precheck: {persistent} of {} sampled pairs show persistent exceptions",
                reports.len()
            ));
        }
    }
    let before = engine.evaluations;
    let k = c.colors();
    let mut alive = vec![true; k as usize + 1];
    let mut stages = Vec::with_capacity(options.i_max + 1);
    for i in 0..=options.i_max {
        let mut colors = Vec::with_capacity(k as usize);
        for a in 1..=k {
            if !alive[a as usize] {
                colors.push(ColorStage { color: a, status: StageStatus::Unreached, k_size: 0, k: None, floor: None, scanned: 0 });
                continue;
            }
            let stage = if i == 0 {
                ColorStage { color: a, status: StageStatus::Defined { value: x.clone() }, k_size: 0, k: Some(Vec::new()), floor: None, scanned: 0 }
            } else {
                let r = engine.stage(a, i, x)?;
                let mut status = r.status.clone();
                if let StageStatus::FuelExhausted { .. } = status {
                    if let Some(certificate) = emptiness_certificate(c, a, r.k.len()) {
                        status = StageStatus::Undefined { certificate };
                    }
                }
                ColorStage {
                    color: a,
                    status,
                    k_size: r.k.len(),
                    k: (r.k.len() <= options.k_record_limit).then(|| r.k.clone()),
                    floor: r.floor.clone(),
                    scanned: r.scanned,
                }
            };
            if stage.status.value().is_none() {
                alive[a as usize] = false;
            }
            colors.push(stage);
        }
        stages.push(ReductionStage { index: i, colors });
    }
    let surviving: Vec<Color> = (1..=k).filter(|&a| alive[a as usize]).collect();
    let chosen = surviving.first().copied();
    let prefix: Vec<Point> = match chosen {
        Some(b) => stages.iter().map(|s| s.colors[b as usize - 1].status.value().cloned().expect("survivor")).collect(),
        None => Vec::new(),
    };
    if chosen.is_none() {
        warnings.push(format!("no color survived through stage {}", options.i_max));
    }
    let within_stream_injective = prefix.iter().all_unique();
    Ok(ReductionTrace {
        base: x.clone(),
        backend: space.clone(),
        coloring: c.clone(),
        options: options.clone(),
        stages,
        surviving,
        chosen,
        prefix,
        within_stream_injective,
        cross_stream_distinct: None,
        invariant_set_is_k: true,
        warnings,
        evaluations: engine.evaluations - before,
        engine_version: ENGINE_VERSION.to_string(),
    })
}

/// Whether `x` and `y` (with `x F_j y`, `j <= i`) get the same stage-`i`
/// value for every color defined at stage `i` for both; each point is
/// computed on its own engine.
pub fn check_stabilization(
    space: &Space,
    c: &Coloring,
    x: &Point,
    y: &Point,
    j: usize,
    i: usize,
    fuel: u64,
) -> Result<bool, ReductionError> {
    if j > i {
        return Err(ReductionError::InvalidParams(format!("need j <= i, got j = {j}, i = {i}")));
    }
    if !space.filtration_related(j, x, y)? {
        return Err(ReductionError::NotFiltrationRelated { x: x.clone(), y: y.clone(), j });
    }
    let mut ex = ReductionEngine::new(space, c, fuel)?;
    let mut ey = ReductionEngine::new(space, c, fuel)?;
    let mut compared = 0;
    for a in 1..=c.colors() {
        let vx = ex.value(a, i, x)?;
        let vy = ey.value(a, i, y)?;
        if let (Some(p), Some(q)) = (vx.value(), vy.value()) {
            compared += 1;
            if p != q {
                return Ok(false);
            }
        }
    }
    if compared == 0 {
        return Err(ReductionError::Incomparable(i));
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum E1Agreement {
    /// The prefixes agree coordinatewise from this index on.
    From(usize),
    InsufficientPrefix,
}

/// The least index from which two equally long prefixes agree.
pub fn compare_e1(sx: &[Point], sy: &[Point]) -> Result<E1Agreement, ReductionError> {
    if sx.len() != sy.len() {
        return Err(ReductionError::LengthMismatch(sx.len(), sy.len()));
    }
    if sx.last() != sy.last() {
        return Ok(E1Agreement::InsufficientPrefix);
    }
    let start = (0..sx.len()).rev().take_while(|&t| sx[t] == sy[t]).last().unwrap_or(0);
    Ok(E1Agreement::From(start))
}

/// The literal cross-stream condition `S(x)(i) ≠ S(y)(j)` for all distinct
/// `i, j`, checked on two prefixes.
pub fn cross_stream_distinct(sx: &[Point], sy: &[Point]) -> bool {
    sx.iter().enumerate().all(|(i, p)| sy.iter().enumerate().all(|(j, q)| i == j || p != q))
}
