//! Colorings of finite within-class sets.
//!
//! A [`Coloring`] is plain data: a tree of constructors that can be
//! serialized into scenario files and certificates and evaluated against a
//! [`Space`]. Evaluation treats its argument as a set, so every constructor
//! is symmetric in the order of its inputs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relspace::{Point, RelError, Section, Space};
use crate::seqspace::{EvpSeq, FiniteFlip, SeqError};

/// Colors are `1..=k`.
pub type Color = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColoringError {
    #[error("expected {expected} points, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("point {0} occurs twice")]
    Duplicate(Point),
    #[error("points {0} and {1} are not related")]
    NotRelated(Point, Point),
    #[error("argument set contains the fixed point {0}")]
    ContainsFixedPoint(Point),
    #[error("point {0} is outside the image of the map")]
    OutsideImage(Point),
    #[error("{0} requires E₀ points")]
    NeedsE0(&'static str),
    #[error("invalid coloring: {0}")]
    Invalid(String),
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// An injective, relation-preserving map between points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case")]
pub enum PointMap {
    Identity,
    /// `x ↦ g·x` on E₀; an involution.
    Flip { flip: FiniteFlip },
    /// Exchanges two classes of the product, keeping indices.
    SwapClasses { a: String, b: String },
    /// `(c, i) ↦ (c, i + by)` on the product; its image misses indices below `by`.
    Shift { by: u64 },
}

impl PointMap {
    pub fn apply(&self, x: &Point) -> Result<Point, ColoringError> {
        Ok(match (self, x) {
            (PointMap::Identity, _) => x.clone(),
            (PointMap::Flip { flip }, Point::Seq(s)) => Point::Seq(s.act(flip)),
            (PointMap::Flip { .. }, _) => return Err(ColoringError::NeedsE0("flip map")),
            (PointMap::SwapClasses { a, b }, Point::Indexed(p)) => {
                let class = if p.class == *a {
                    b
                } else if p.class == *b {
                    a
                } else {
                    &p.class
                };
                Point::indexed(class, p.index)
            }
            (PointMap::Shift { by }, Point::Indexed(p)) => Point::indexed(&p.class, p.index + by),
            _ => return Err(ColoringError::Invalid(format!("map {self:?} does not apply to {x}"))),
        })
    }

    /// The preimage of `y`, or an error if `y` is not in the image.
    pub fn preimage(&self, y: &Point) -> Result<Point, ColoringError> {
        match (self, y) {
            (PointMap::Shift { by }, Point::Indexed(p)) => {
                if p.index < *by {
                    Err(ColoringError::OutsideImage(y.clone()))
                } else {
                    Ok(Point::indexed(&p.class, p.index - by))
                }
            }
            // the remaining maps are involutions
            _ => self.apply(y),
        }
    }
}

fn default_dim() -> usize {
    2
}

fn default_colors() -> u32 {
    2
}

fn default_fuel() -> u64 {
    1 << 16
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Coloring {
    Constant {
        #[serde(default = "default_dim")]
        n: usize,
        #[serde(default = "default_colors")]
        k: u32,
        value: Color,
    },
    /// Parity of the digit sum below `δ`; dimension 2, two colors.
    Parity,
    /// Color 1 on edges `{x, x+1}` of the ζ-successor graph, else 2.
    Adjacency,
    /// Applies `base` to the two least points in the linear order of points.
    Lift { base: Box<Coloring>, n: usize },
    /// `c_y(A) = c({y} ∪ A)`.
    Fix { base: Box<Coloring>, point: Point },
    /// Extends a coloring of a section by retracting every argument into it.
    Extend {
        base: Box<Coloring>,
        section: Section,
        #[serde(default = "default_fuel")]
        fuel: u64,
    },
    /// `c'({f(x₁)..f(xₙ)}) = c({x₁..xₙ})`.
    Pushforward { base: Box<Coloring>, map: PointMap },
    /// A seeded finite-memory coloring of short digit windows and flip parities.
    Random {
        seed: u64,
        n: usize,
        #[serde(default = "default_colors")]
        k: u32,
    },
}

impl Coloring {
    pub fn constant(n: usize, k: u32, value: Color) -> Result<Self, ColoringError> {
        let c = Coloring::Constant { n, k, value };
        c.check()?;
        Ok(c)
    }

    pub fn random(seed: u64, n: usize, k: u32) -> Result<Self, ColoringError> {
        let c = Coloring::Random { seed, n, k };
        c.check()?;
        Ok(c)
    }

    /// `c_n({x₁ < … < xₙ}) = c({x₁, x₂})`; the identity lift when `n = 2`.
    pub fn lift(base: Coloring, n: usize) -> Result<Self, ColoringError> {
        if n == 2 && base.dim() == 2 {
            return Ok(base);
        }
        let c = Coloring::Lift { base: Box::new(base), n };
        c.check()?;
        Ok(c)
    }

    pub fn fix(base: Coloring, point: Point) -> Result<Self, ColoringError> {
        let c = Coloring::Fix { base: Box::new(base), point };
        c.check()?;
        Ok(c)
    }

    pub fn extend(base: Coloring, section: Section, fuel: u64) -> Result<Self, ColoringError> {
        let c = Coloring::Extend { base: Box::new(base), section, fuel };
        c.check()?;
        Ok(c)
    }

    pub fn pushforward(base: Coloring, map: PointMap) -> Result<Self, ColoringError> {
        let c = Coloring::Pushforward { base: Box::new(base), map };
        c.check()?;
        Ok(c)
    }

    /// Structural validation of the constructor tree.
    pub fn check(&self) -> Result<(), ColoringError> {
        let invalid = |m: &str| Err(ColoringError::Invalid(m.to_string()));
        match self {
            Coloring::Constant { n, k, value } => {
                if *n == 0 || *k == 0 {
                    return invalid("dimension and color count must be positive");
                }
                if *value == 0 || value > k {
                    return invalid("constant value must lie in 1..=k");
                }
            }
            Coloring::Parity | Coloring::Adjacency => {}
            Coloring::Lift { base, n } => {
                base.check()?;
                if base.dim() != 2 {
                    return invalid("lift needs a base of dimension 2");
                }
                if *n < 2 {
                    return invalid("lift dimension must be at least 2");
                }
            }
            Coloring::Fix { base, .. } => {
                base.check()?;
                if base.dim() < 2 {
                    return invalid("fixing a point needs dimension at least 2");
                }
            }
            Coloring::Extend { base, .. } | Coloring::Pushforward { base, .. } => base.check()?,
            Coloring::Random { n, k, .. } => {
                if *n == 0 || *k == 0 {
                    return invalid("dimension and color count must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Coloring::Constant { n, .. } | Coloring::Random { n, .. } | Coloring::Lift { n, .. } => *n,
            Coloring::Parity | Coloring::Adjacency => 2,
            Coloring::Fix { base, .. } => base.dim().saturating_sub(1),
            Coloring::Extend { base, .. } | Coloring::Pushforward { base, .. } => base.dim(),
        }
    }

    pub fn colors(&self) -> u32 {
        match self {
            Coloring::Constant { k, .. } | Coloring::Random { k, .. } => *k,
            Coloring::Parity | Coloring::Adjacency => 2,
            Coloring::Lift { base, .. }
            | Coloring::Fix { base, .. }
            | Coloring::Extend { base, .. }
            | Coloring::Pushforward { base, .. } => base.colors(),
        }
    }

    /// Evaluates on a set of `dim()` pairwise distinct, pairwise related
    /// points, checking those preconditions first.
    pub fn color(&self, space: &Space, set: &[Point]) -> Result<Color, ColoringError> {
        if set.len() != self.dim() {
            return Err(ColoringError::WrongArity { expected: self.dim(), got: set.len() });
        }
        for (i, x) in set.iter().enumerate() {
            space.validate(x)?;
            for y in &set[..i] {
                if x == y {
                    return Err(ColoringError::Duplicate(x.clone()));
                }
                if !space.related(x, y)? {
                    return Err(ColoringError::NotRelated(y.clone(), x.clone()));
                }
            }
        }
        self.color_trusted(space, set)
    }

    /// Evaluation without the arity/distinctness/relatedness checks. Callers
    /// that draw points from one class enumeration use this on hot paths.
    pub fn color_trusted(&self, space: &Space, set: &[Point]) -> Result<Color, ColoringError> {
        let refs: Vec<&Point> = set.iter().collect();
        self.color_refs(space, &refs)
    }

    /// [`Coloring::color_trusted`] over borrowed points.
    pub fn color_refs(&self, space: &Space, set: &[&Point]) -> Result<Color, ColoringError> {
        match self {
            Coloring::Constant { value, .. } => Ok(*value),
            Coloring::Parity => {
                let (x, y) = pair_seqs(set, "parity coloring")?;
                parity_color(x, y)
            }
            Coloring::Adjacency => {
                let d = space.zeta_distance(set[0], set[1])?;
                Ok(if d.abs() == 1 { 1 } else { 2 })
            }
            Coloring::Lift { base, .. } => {
                let mut sorted: Vec<&Point> = set.to_vec();
                sorted.sort();
                base.color_refs(space, &sorted[..2])
            }
            Coloring::Fix { base, point } => {
                if set.contains(&point) {
                    return Err(ColoringError::ContainsFixedPoint(point.clone()));
                }
                let mut full = Vec::with_capacity(set.len() + 1);
                full.push(point);
                full.extend_from_slice(set);
                base.color_refs(space, &full)
            }
            Coloring::Extend { base, section, fuel } => {
                let retracted: Vec<Point> = set
                    .iter()
                    .map(|x| space.retract(section, x, *fuel))
                    .collect::<Result<_, _>>()?;
                let distinct: BTreeSet<&Point> = retracted.iter().collect();
                if distinct.len() == retracted.len() {
                    base.color_trusted(space, &retracted)
                } else {
                    Ok(1)
                }
            }
            Coloring::Pushforward { base, map } => {
                let pre: Vec<Point> = set.iter().map(|y| map.preimage(y)).collect::<Result<_, _>>()?;
                base.color_trusted(space, &pre)
            }
            Coloring::Random { seed, n, k } => Ok(random_color(*seed, *n, *k, set)),
        }
    }
}

fn pair_seqs<'a>(set: &[&'a Point], what: &'static str) -> Result<(&'a EvpSeq, &'a EvpSeq), ColoringError> {
    match *set {
        [Point::Seq(x), Point::Seq(y)] => Ok((x, y)),
        [_, _] => Err(ColoringError::NeedsE0(what)),
        _ => Err(ColoringError::WrongArity { expected: 2, got: set.len() }),
    }
}

/// `1` if `Σ_{i<δ} x(i) + Σ_{i<δ} y(i)` is even, `2` otherwise.
pub fn parity_color(x: &EvpSeq, y: &EvpSeq) -> Result<Color, ColoringError> {
    if x == y {
        return Err(ColoringError::Duplicate(Point::Seq(x.clone())));
    }
    let delta = x.delta(y)?;
    let ones = (0..delta).filter(|&i| x.bit(i)).count() + (0..delta).filter(|&i| y.bit(i)).count();
    Ok(if ones % 2 == 0 { 1 } else { 2 })
}

/// The subrelation `x F y ⟺ x = y or c({x, y}) = 1` of the parity coloring.
pub fn parity_component(x: &EvpSeq, y: &EvpSeq) -> Result<bool, ColoringError> {
    if x == y {
        return Ok(true);
    }
    Ok(parity_color(x, y)? == 1)
}

// splitmix64 finalizer; stable across platforms and toolchains
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const RANDOM_WINDOW: usize = 2;
const RANDOM_RESIDUES: u64 = 4;
const RANDOM_TYPES: usize = 8;

/// The type a `Random` coloring sees of `x`, relative to a point of the same
/// class: on E₀ the digit window and the flip parity, on the product the
/// index residue.
fn random_type(reference: &Point, x: &Point) -> u8 {
    match (reference, x) {
        (Point::Seq(r), Point::Seq(s)) => {
            let window = (0..RANDOM_WINDOW).fold(0u8, |acc, i| acc << 1 | s.bit(i) as u8);
            let odd = r.flip_difference(s).map(|g| !g.is_even()).unwrap_or(false);
            window | (odd as u8) << RANDOM_WINDOW
        }
        (_, Point::Indexed(q)) => (q.index % RANDOM_RESIDUES) as u8,
        _ => 0,
    }
}

fn class_salt(x: &Point) -> u64 {
    match x {
        Point::Indexed(p) => p.class.bytes().fold(0xCBF2_9CE4_8422_2325u64, |a, b| (a ^ b as u64).wrapping_mul(0x100_0000_01B3)),
        Point::Seq(_) => 0,
    }
}

/// The color of a set from its member types. On E₀ the set splits into two
/// parity blocks; the sorted pair of blocks does not depend on the reference.
fn random_color_of_types(seed: u64, n: usize, k: u32, reference: &Point, types: &[u8]) -> Color {
    let mut h = mix(seed ^ mix(n as u64));
    let mut absorb = |v: u64| h = mix(h ^ v);
    match reference {
        Point::Seq(_) => {
            let mut blocks = [Vec::new(), Vec::new()];
            for &t in types {
                blocks[(t >> RANDOM_WINDOW) as usize].push((t & 3) as u64);
            }
            for b in &mut blocks {
                b.sort_unstable();
            }
            blocks.sort();
            for b in &blocks {
                absorb(b.len() as u64 + 0x100);
                b.iter().for_each(|&w| absorb(w));
            }
        }
        Point::Indexed(_) => {
            absorb(class_salt(reference));
            let mut residues: Vec<u64> = types.iter().map(|&t| t as u64).collect();
            residues.sort_unstable();
            residues.into_iter().for_each(absorb);
        }
    }
    1 + (h % k as u64) as Color
}

fn random_color(seed: u64, n: usize, k: u32, set: &[&Point]) -> Color {
    let Some(&reference) = set.first() else {
        return 1 + (mix(seed ^ mix(n as u64)) % k as u64) as Color;
    };
    let types: Vec<u8> = set.iter().map(|x| random_type(reference, x)).collect();
    random_color_of_types(seed, n, k, reference, &types)
}

/// A finite-type coloring compiled for one class: each point gets a small
/// type, and the color of a set is a table lookup on its members' types.
#[derive(Clone, Debug)]
pub struct TypeTable {
    reference: Point,
    n: usize,
    table: Vec<Color>,
}

impl TypeTable {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of distinct types; table positions are base-`width` numerals.
    pub fn width(&self) -> usize {
        RANDOM_TYPES
    }

    pub fn point_type(&self, x: &Point) -> u8 {
        random_type(&self.reference, x)
    }

    /// Color of a set given as a base-`width` numeral of member types.
    pub fn color_at(&self, position: usize) -> Color {
        self.table[position]
    }

    pub fn color(&self, types: &[u8]) -> Color {
        self.color_at(types.iter().fold(0, |acc, &t| acc * RANDOM_TYPES + t as usize))
    }
}

const MAX_TABLE_DIM: usize = 5;

impl Coloring {
    /// Compiles a `Random` or `Constant` coloring for the class of
    /// `reference`; other constructors are evaluated directly.
    pub fn type_table(&self, reference: &Point) -> Option<TypeTable> {
        let n = self.dim();
        if n > MAX_TABLE_DIM {
            return None;
        }
        let size = RANDOM_TYPES.pow(n as u32);
        let table = match self {
            Coloring::Constant { value, .. } => vec![*value; size],
            Coloring::Random { seed, n, k } => (0..size)
                .map(|mut pos| {
                    let mut types = vec![0u8; *n];
                    for t in types.iter_mut().rev() {
                        *t = (pos % RANDOM_TYPES) as u8;
                        pos /= RANDOM_TYPES;
                    }
                    random_color_of_types(*seed, *n, *k, reference, &types)
                })
                .collect(),
            _ => return None,
        };
        Some(TypeTable { reference: reference.clone(), n, table })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoExceptions,
    FinitelyManyWithinHorizon,
    /// At least a quarter of the scan are exceptions and they continue into
    /// its last quarter; a warning, not a proof.
    Persistent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exception {
    /// Position of `z` among the scanned points.
    pub position: usize,
    pub z: Point,
    pub colors: (Color, Color),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlmostTransReport {
    pub horizon: usize,
    pub exceptions: Vec<Exception>,
    pub verdict: Verdict,
}

/// Scans the first `horizon` points `z` of the class of `a` outside
/// `b1 ∪ b2` and records every `z` with `c({z} ∪ b1) ≠ c({z} ∪ b2)`.
pub fn almost_transitivity_check(
    space: &Space,
    c: &Coloring,
    a: &[Point],
    b1: &[Point],
    b2: &[Point],
    horizon: usize,
) -> Result<AlmostTransReport, ColoringError> {
    let n = c.dim();
    if n < 2 {
        return Err(ColoringError::Invalid("almost transitivity needs dimension at least 2".into()));
    }
    if a.len() < n {
        return Err(ColoringError::WrongArity { expected: n, got: a.len() });
    }
    for b in [b1, b2] {
        if b.len() != n - 1 {
            return Err(ColoringError::WrongArity { expected: n - 1, got: b.len() });
        }
        if let Some(x) = b.iter().find(|x| !a.contains(x)) {
            return Err(ColoringError::Invalid(format!("{x} is not in A")));
        }
    }
    let s1: BTreeSet<&Point> = b1.iter().collect();
    let s2: BTreeSet<&Point> = b2.iter().collect();
    if s1 == s2 {
        return Err(ColoringError::Invalid("B₁ and B₂ must differ".into()));
    }
    let anchor = a.iter().min().expect("A is nonempty");
    let mut exceptions = Vec::new();
    let candidates = space.omega_enumerate(anchor)?.filter(|z| !s1.contains(z) && !s2.contains(z));
    for (position, z) in candidates.take(horizon).enumerate() {
        let mut e1 = vec![z.clone()];
        e1.extend_from_slice(b1);
        let mut e2 = vec![z.clone()];
        e2.extend_from_slice(b2);
        let c1 = c.color(space, &e1)?;
        let c2 = c.color(space, &e2)?;
        if c1 != c2 {
            exceptions.push(Exception { position, z, colors: (c1, c2) });
        }
    }
    let late = horizon - horizon / 4;
    let verdict = if exceptions.is_empty() {
        Verdict::NoExceptions
    } else if 4 * exceptions.len() >= horizon && exceptions.iter().any(|e| e.position >= late) {
        Verdict::Persistent
    } else {
        Verdict::FinitelyManyWithinHorizon
    };
    Ok(AlmostTransReport { horizon, exceptions, verdict })
}

/// Checks every pair of distinct `(n-1)`-subsets of the first `n + 1` orbit
/// points of `x`: a finite sample of the almost transitivity condition.
pub fn sample_almost_transitivity(
    space: &Space,
    c: &Coloring,
    x: &Point,
    horizon: usize,
) -> Result<Vec<AlmostTransReport>, ColoringError> {
    use itertools::Itertools;
    let n = c.dim();
    let a: Vec<Point> = space.orbit_enumerate(x)?.take(n + 1).collect();
    let subsets: Vec<Vec<Point>> = a.iter().cloned().combinations(n - 1).collect();
    let mut reports = Vec::new();
    for (i, b1) in subsets.iter().enumerate() {
        for b2 in &subsets[i + 1..] {
            reports.push(almost_transitivity_check(space, c, &a, b1, b2, horizon)?);
        }
    }
    Ok(reports)
}
