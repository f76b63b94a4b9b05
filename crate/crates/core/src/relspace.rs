//! Equivalence-relation backends.
//!
//! Two backends share one point type: the nonsmooth relation E₀ on
//! eventually periodic sequences, and a smooth product whose classes are
//! `class_id × ℕ` with the transversal `index = 0`. Every search that is
//! unbounded in principle takes an explicit fuel budget.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::seqspace::{EvpSeq, FiniteFlip, SeqError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelError {
    #[error("point {0} does not belong to the {1} backend")]
    BackendMismatch(Point, &'static str),
    #[error("points {0} and {1} are not related")]
    NotRelated(Point, Point),
    #[error("no transversal available on the nonsmooth backend")]
    NoTransversal,
    #[error("the class of {0} has a constant tail and carries no ζ-order")]
    NoZetaOrder(Point),
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(u64),
    #[error("class {0:?} is not declared by this product")]
    UnknownClass(String),
    #[error("invalid literal {0:?}: {1}")]
    Parse(String, String),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// A point of the smooth product: the `index`-th element of class `class`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassPoint {
    pub class: String,
    pub index: u64,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Seq(EvpSeq),
    Indexed(ClassPoint),
}

impl Point {
    pub fn indexed(class: &str, index: u64) -> Self {
        Point::Indexed(ClassPoint { class: class.to_string(), index })
    }

    pub fn as_seq(&self) -> Option<&EvpSeq> {
        match self {
            Point::Seq(x) => Some(x),
            Point::Indexed(_) => None,
        }
    }

    pub fn as_indexed(&self) -> Option<&ClassPoint> {
        match self {
            Point::Indexed(p) => Some(p),
            Point::Seq(_) => None,
        }
    }
}

impl From<EvpSeq> for Point {
    fn from(x: EvpSeq) -> Self {
        Point::Seq(x)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Seq(x) => write!(f, "{x}"),
            Point::Indexed(p) => write!(f, "{}:{}", p.class, p.index),
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({self})")
    }
}

impl FromStr for Point {
    type Err = RelError;

    /// `prefix|period` for E₀ points, `class:index` for product points.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.contains('|') {
            return Ok(Point::Seq(s.parse()?));
        }
        let (class, index) = s
            .rsplit_once(':')
            .ok_or_else(|| RelError::Parse(s.to_string(), "expected prefix|period or class:index".into()))?;
        if class.is_empty() {
            return Err(RelError::Parse(s.to_string(), "empty class id".into()));
        }
        let index = index
            .parse()
            .map_err(|e| RelError::Parse(s.to_string(), format!("bad index: {e}")))?;
        Ok(Point::indexed(class, index))
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The smooth backend. An empty class list accepts every class id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothProduct {
    #[serde(default)]
    pub classes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum Space {
    E0,
    Smooth(SmoothProduct),
}

impl Space {
    pub fn smooth<I: IntoIterator<Item = S>, S: Into<String>>(classes: I) -> Self {
        Space::Smooth(SmoothProduct { classes: classes.into_iter().map(Into::into).collect() })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Space::E0 => "e0",
            Space::Smooth(_) => "smooth",
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, Space::Smooth(_))
    }

    /// Checks that `x` is a point of this backend.
    pub fn validate(&self, x: &Point) -> Result<(), RelError> {
        match (self, x) {
            (Space::E0, Point::Seq(_)) => Ok(()),
            (Space::Smooth(s), Point::Indexed(p)) => {
                if s.classes.is_empty() || s.classes.contains(&p.class) {
                    Ok(())
                } else {
                    Err(RelError::UnknownClass(p.class.clone()))
                }
            }
            _ => Err(RelError::BackendMismatch(x.clone(), self.name())),
        }
    }

    pub fn related(&self, x: &Point, y: &Point) -> Result<bool, RelError> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(match (x, y) {
            (Point::Seq(a), Point::Seq(b)) => a.e0_related(b),
            (Point::Indexed(a), Point::Indexed(b)) => a.class == b.class,
            _ => unreachable!("validated against one backend"),
        })
    }

    /// The ω-ordered enumeration of `[anchor]`: `g_i · anchor` on E₀, and
    /// `(class, i)` on the smooth product (so it starts at `σ(anchor)`).
    pub fn omega_enumerate(&self, anchor: &Point) -> Result<OmegaEnum, RelError> {
        self.validate(anchor)?;
        Ok(match anchor {
            Point::Seq(x) => OmegaEnum::E0 { base: x.clone(), next: 0 },
            Point::Indexed(p) => OmegaEnum::Smooth { class: p.class.clone(), next: 0, skip: None },
        })
    }

    /// The group-action enumeration anchored at `x` itself: `x` first, then
    /// the rest of the class. Agrees with [`Space::omega_enumerate`] on E₀;
    /// on the smooth product it is `x` followed by the class in index order.
    pub fn orbit_enumerate(&self, x: &Point) -> Result<OmegaEnum, RelError> {
        self.validate(x)?;
        Ok(match x {
            Point::Seq(s) => OmegaEnum::E0 { base: s.clone(), next: 0 },
            Point::Indexed(p) => OmegaEnum::Smooth { class: p.class.clone(), next: 0, skip: Some(p.index) },
        })
    }

    /// Position of a product point in its class's ζ-order: even indices
    /// ascend from 0, odd indices descend below them.
    fn zeta_rank(index: u64) -> i128 {
        let half = (index / 2) as i128;
        if index.is_multiple_of(2) {
            half
        } else {
            -half - 1
        }
    }

    fn zeta_unrank(rank: i128) -> u64 {
        if rank >= 0 {
            (rank as u64) * 2
        } else {
            ((-rank - 1) as u64) * 2 + 1
        }
    }

    fn require_zeta(&self, x: &Point) -> Result<(), RelError> {
        if let Point::Seq(s) = x {
            if s.has_constant_tail() {
                return Err(RelError::NoZetaOrder(x.clone()));
            }
        }
        Ok(())
    }

    /// The ζ-type order on a class: the 2-adic integer order on E₀ (realized
    /// by the odometer), the interleaved index order on the product.
    pub fn zeta_compare(&self, x: &Point, y: &Point) -> Result<Ordering, RelError> {
        if !self.related(x, y)? {
            return Err(RelError::NotRelated(x.clone(), y.clone()));
        }
        self.require_zeta(x)?;
        match (x, y) {
            (Point::Seq(a), Point::Seq(b)) => {
                let diff = match a.small_difference(b) {
                    Some(d) => d.signum() as i32,
                    None => match a.integer_difference(b)?.sign() {
                        num_bigint::Sign::Minus => -1,
                        num_bigint::Sign::NoSign => 0,
                        num_bigint::Sign::Plus => 1,
                    },
                };
                // y - x > 0 means y lies above x
                Ok(0.cmp(&diff))
            }
            (Point::Indexed(a), Point::Indexed(b)) => {
                Ok(Self::zeta_rank(a.index).cmp(&Self::zeta_rank(b.index)))
            }
            _ => unreachable!("validated against one backend"),
        }
    }

    /// Signed ζ-distance `y - x` between related points, when it fits.
    pub fn zeta_distance(&self, x: &Point, y: &Point) -> Result<i128, RelError> {
        if !self.related(x, y)? {
            return Err(RelError::NotRelated(x.clone(), y.clone()));
        }
        self.require_zeta(x)?;
        match (x, y) {
            (Point::Seq(a), Point::Seq(b)) => a
                .small_difference(b)
                .ok_or_else(|| RelError::Parse(format!("{x} {y}"), "distance exceeds i128".into())),
            (Point::Indexed(a), Point::Indexed(b)) => {
                Ok(Self::zeta_rank(b.index) - Self::zeta_rank(a.index))
            }
            _ => unreachable!("validated against one backend"),
        }
    }

    /// Immediate ζ-successor.
    pub fn zeta_successor(&self, x: &Point) -> Result<Point, RelError> {
        self.validate(x)?;
        self.require_zeta(x)?;
        Ok(match x {
            Point::Seq(s) => Point::Seq(s.odometer()),
            Point::Indexed(p) => Point::indexed(&p.class, Self::zeta_unrank(Self::zeta_rank(p.index) + 1)),
        })
    }

    /// Immediate ζ-predecessor.
    pub fn zeta_predecessor(&self, x: &Point) -> Result<Point, RelError> {
        self.validate(x)?;
        self.require_zeta(x)?;
        Ok(match x {
            Point::Seq(s) => Point::Seq(s.odometer_inverse()),
            Point::Indexed(p) => Point::indexed(&p.class, Self::zeta_unrank(Self::zeta_rank(p.index) - 1)),
        })
    }

    /// `x F_i y`. On E₀: agreement from position `i` on. On the product:
    /// equal, or same class with both indices below `i`.
    pub fn filtration_related(&self, i: usize, x: &Point, y: &Point) -> Result<bool, RelError> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(match (x, y) {
            (Point::Seq(a), Point::Seq(b)) => a.e0_related(b) && a.delta(b)? <= i,
            (Point::Indexed(a), Point::Indexed(b)) => {
                a == b || (a.class == b.class && a.index < i as u64 && b.index < i as u64)
            }
            _ => unreachable!("validated against one backend"),
        })
    }

    /// The full `F_i`-class of `x`, sorted.
    pub fn filtration_class(&self, i: usize, x: &Point) -> Result<Vec<Point>, RelError> {
        self.validate(x)?;
        let mut class: Vec<Point> = match x {
            Point::Seq(s) => {
                let rep = clear_low_bits(s, i);
                (0..1u64 << i).map(|m| Point::Seq(rep.act(&FiniteFlip::from_index(m)))).collect()
            }
            Point::Indexed(p) => {
                if p.index < i as u64 {
                    (0..i as u64).map(|j| Point::indexed(&p.class, j)).collect()
                } else {
                    vec![x.clone()]
                }
            }
        };
        class.sort();
        Ok(class)
    }

    /// A fixed representative of the `F_i`-class of `x`: on E₀ the point with
    /// its first `i` digits cleared, on the product the least index.
    pub fn filtration_rep(&self, i: usize, x: &Point) -> Result<Point, RelError> {
        self.validate(x)?;
        Ok(match x {
            Point::Seq(s) => Point::Seq(clear_low_bits(s, i)),
            Point::Indexed(p) if p.index < i as u64 => Point::indexed(&p.class, 0),
            Point::Indexed(_) => x.clone(),
        })
    }

    /// Representatives of the `F_j`-classes contained in the `F_i`-class of
    /// `x` (`j <= i`), sorted.
    pub fn filtration_subreps(&self, i: usize, j: usize, x: &Point) -> Result<Vec<Point>, RelError> {
        assert!(j <= i, "subclasses need j <= i");
        self.validate(x)?;
        let mut reps: Vec<Point> = match x {
            Point::Seq(s) => {
                let rep = clear_low_bits(s, i);
                (0..1u64 << (i - j))
                    .map(|m| Point::Seq(rep.act(&FiniteFlip::from_index(m << j))))
                    .collect()
            }
            Point::Indexed(_) => {
                let mut reps: Vec<Point> = self
                    .filtration_class(i, x)?
                    .iter()
                    .map(|y| self.filtration_rep(j, y))
                    .collect::<Result<_, _>>()?;
                reps.dedup();
                reps
            }
        };
        reps.sort();
        reps.dedup();
        Ok(reps)
    }

    /// The transversal representative of `[x]`; only the smooth backend has one.
    pub fn selector(&self, x: &Point) -> Result<Point, RelError> {
        self.validate(x)?;
        match x {
            Point::Seq(_) => Err(RelError::NoTransversal),
            Point::Indexed(p) => Ok(Point::indexed(&p.class, 0)),
        }
    }

    /// `g_Y(x)`: the first point of the orbit enumeration from `x` that lies
    /// in `section`. Identity on members of the section.
    pub fn retract(&self, section: &Section, x: &Point, fuel: u64) -> Result<Point, RelError> {
        let mut spent = 0u64;
        for y in self.orbit_enumerate(x)? {
            if spent >= fuel {
                break;
            }
            spent += 1;
            if section.contains(&y) {
                return Ok(y);
            }
        }
        Err(RelError::FuelExhausted(spent))
    }
}

fn clear_low_bits(x: &EvpSeq, i: usize) -> EvpSeq {
    let g = FiniteFlip::from_positions((0..i).filter(|&m| x.bit(m)));
    x.act(&g)
}

/// Lazy class enumeration of order type ω.
#[derive(Clone, Debug)]
pub enum OmegaEnum {
    E0 { base: EvpSeq, next: u64 },
    Smooth { class: String, next: u64, skip: Option<u64> },
}

impl Iterator for OmegaEnum {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        match self {
            OmegaEnum::E0 { base, next } => {
                let p = base.act(&FiniteFlip::from_index(*next));
                *next += 1;
                Some(Point::Seq(p))
            }
            OmegaEnum::Smooth { class, next, skip } => {
                // With a skip anchor the stream is anchor, 0, 1, ... minus anchor.
                let index = match *skip {
                    Some(a) if *next == 0 => a,
                    Some(a) => {
                        let k = *next - 1;
                        if k >= a {
                            k + 1
                        } else {
                            k
                        }
                    }
                    None => *next,
                };
                *next += 1;
                Some(Point::indexed(class, index))
            }
        }
    }
}

/// A subset of the space given by a membership rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Section {
    /// Every point.
    All,
    /// No point.
    Empty,
    /// E₀ points with digit `pos` equal to `value`.
    Bit { pos: usize, value: bool },
    /// The class of a fixed point; complete only on that class.
    ClassOf(Point),
    /// Product points with `index % modulus == residue`.
    IndexMod { modulus: u64, residue: u64 },
}

impl Section {
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Section::All => true,
            Section::Empty => false,
            Section::Bit { pos, value } => x.as_seq().is_some_and(|s| s.bit(*pos) == *value),
            Section::ClassOf(p) => match (p, x) {
                (Point::Seq(a), Point::Seq(b)) => a.e0_related(b),
                (Point::Indexed(a), Point::Indexed(b)) => a.class == b.class,
                _ => false,
            },
            Section::IndexMod { modulus, residue } => {
                x.as_indexed().is_some_and(|p| p.index % modulus == *residue)
            }
        }
    }

    /// Whether the section claims to meet every class. Claims are checked per
    /// class with [`Space::retract`], never assumed.
    pub fn claims_complete(&self) -> bool {
        matches!(self, Section::All | Section::Bit { .. } | Section::IndexMod { .. })
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Section::All => f.write_str("all"),
            Section::Empty => f.write_str("empty"),
            Section::Bit { pos, value } => write!(f, "bit[{pos}]={}", u8::from(*value)),
            Section::ClassOf(p) => write!(f, "class[{p}]"),
            Section::IndexMod { modulus, residue } => write!(f, "index%{modulus}={residue}"),
        }
    }
}

impl FromStr for Section {
    type Err = RelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = |why: &str| RelError::Parse(s.to_string(), why.to_string());
        match s {
            "all" => return Ok(Section::All),
            "empty" => return Ok(Section::Empty),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("bit[") {
            let (pos, value) = rest.split_once("]=").ok_or_else(|| bad("expected bit[k]=v"))?;
            let pos = pos.parse().map_err(|_| bad("bad bit position"))?;
            let value = match value {
                "0" => false,
                "1" => true,
                _ => return Err(bad("bit value must be 0 or 1")),
            };
            return Ok(Section::Bit { pos, value });
        }
        if let Some(rest) = s.strip_prefix("class[") {
            let lit = rest.strip_suffix(']').ok_or_else(|| bad("expected class[point]"))?;
            return Ok(Section::ClassOf(lit.parse()?));
        }
        if let Some(rest) = s.strip_prefix("index%") {
            let (m, r) = rest.split_once('=').ok_or_else(|| bad("expected index%m=r"))?;
            let modulus: u64 = m.parse().map_err(|_| bad("bad modulus"))?;
            let residue = r.parse().map_err(|_| bad("bad residue"))?;
            if modulus == 0 {
                return Err(bad("modulus must be positive"));
            }
            return Ok(Section::IndexMod { modulus, residue });
        }
        Err(bad("unknown section"))
    }
}

impl Serialize for Section {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Section {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
