//! Eventually periodic points of Cantor space.
//!
//! A point is stored as `prefix · period^ω` in a canonical form (primitive
//! period, irreducible prefix), so structural equality is equality of the
//! denoted sequences. Digit `n` is the coefficient of `2^n`: reading a point
//! as a 2-adic integer makes flips, the odometer and integer differences
//! agree on one index convention.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error("period must be nonempty")]
    EmptyPeriod,
    #[error("sequences {0} and {1} are not eventually equal")]
    NotRelated(EvpSeq, EvpSeq),
    #[error("denominator {0} is not odd and positive")]
    EvenDenominator(BigInt),
    #[error("invalid sequence literal {0:?}: {1}")]
    Parse(String, &'static str),
}

/// An eventually periodic binary sequence in canonical form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EvpSeq {
    prefix: Vec<bool>,
    period: Vec<bool>,
}

/// Builds the canonical form of `prefix · period^ω`.
pub fn canonicalize(prefix: &[bool], period: &[bool]) -> Result<EvpSeq, SeqError> {
    if period.is_empty() {
        return Err(SeqError::EmptyPeriod);
    }
    let mut period = primitive_root(period).to_vec();
    let mut prefix = prefix.to_vec();
    // prefix·b, w·b  ==  prefix, b·w
    while let (Some(&p), Some(&q)) = (prefix.last(), period.last()) {
        if p != q {
            break;
        }
        prefix.pop();
        period.rotate_right(1);
    }
    Ok(EvpSeq { prefix, period })
}

fn primitive_root(word: &[bool]) -> &[bool] {
    let len = word.len();
    for d in 1..len {
        if len.is_multiple_of(d) && (d..len).all(|i| word[i] == word[i - d]) {
            return &word[..d];
        }
    }
    word
}

impl EvpSeq {
    pub fn new(prefix: &[bool], period: &[bool]) -> Result<Self, SeqError> {
        canonicalize(prefix, period)
    }

    /// The all-zero sequence, i.e. the 2-adic integer 0.
    pub fn zeros() -> Self {
        EvpSeq { prefix: Vec::new(), period: vec![false] }
    }

    /// The all-one sequence, i.e. the 2-adic integer -1.
    pub fn ones() -> Self {
        EvpSeq { prefix: Vec::new(), period: vec![true] }
    }

    pub fn prefix(&self) -> &[bool] {
        &self.prefix
    }

    pub fn period(&self) -> &[bool] {
        &self.period
    }

    #[inline]
    pub fn bit(&self, n: usize) -> bool {
        if n < self.prefix.len() {
            self.prefix[n]
        } else {
            self.period[(n - self.prefix.len()) % self.period.len()]
        }
    }

    /// The first `len` digits.
    pub fn digits(&self, len: usize) -> Vec<bool> {
        (0..len).map(|n| self.bit(n)).collect()
    }

    /// True for the two classes whose tail is constant (`0^ω` or `1^ω`).
    pub fn has_constant_tail(&self) -> bool {
        self.period.len() == 1
    }

    /// Rebuilds the point from its first `len` digits (any `len` at least the
    /// prefix length) with the period realigned to start at `len`.
    fn with_head(&self, head: Vec<bool>) -> EvpSeq {
        let len = head.len();
        debug_assert!(len >= self.prefix.len());
        let p = self.period.len();
        let shift = (len - self.prefix.len()) % p;
        let mut period = self.period.clone();
        period.rotate_left(shift);
        canonicalize(&head, &period).expect("period is nonempty")
    }

    /// Number of leading positions after which `self` and `other` are both
    /// periodic with a common period: positions `[N, N + L)` decide the tails.
    fn window(&self, other: &EvpSeq) -> (usize, usize) {
        let n = self.prefix.len().max(other.prefix.len());
        let l = self.period.len().lcm(&other.period.len());
        (n, l)
    }

    pub fn e0_related(&self, other: &EvpSeq) -> bool {
        let (n, l) = self.window(other);
        (n..n + l).all(|m| self.bit(m) == other.bit(m))
    }

    /// Least `n` with `self(m) == other(m)` for all `m >= n`.
    pub fn delta(&self, other: &EvpSeq) -> Result<usize, SeqError> {
        if !self.e0_related(other) {
            return Err(SeqError::NotRelated(self.clone(), other.clone()));
        }
        let (n, _) = self.window(other);
        Ok((0..n).rev().find(|&m| self.bit(m) != other.bit(m)).map_or(0, |m| m + 1))
    }

    /// Flips the digits at the positions of `g`.
    pub fn act(&self, g: &FiniteFlip) -> EvpSeq {
        let Some(&top) = g.positions.iter().next_back() else {
            return self.clone();
        };
        let len = self.prefix.len().max(top + 1);
        let mut head = self.digits(len);
        for &pos in &g.positions {
            head[pos] = !head[pos];
        }
        self.with_head(head)
    }

    /// The unique flip taking `self` to `other`.
    pub fn flip_difference(&self, other: &EvpSeq) -> Result<FiniteFlip, SeqError> {
        let delta = self.delta(other)?;
        Ok(FiniteFlip {
            positions: (0..delta).filter(|&m| self.bit(m) != other.bit(m)).collect(),
        })
    }

    /// `other - self` as 2-adic integers; finite because the digits differ at
    /// finitely many positions.
    pub fn integer_difference(&self, other: &EvpSeq) -> Result<BigInt, SeqError> {
        let delta = self.delta(other)?;
        let mut acc = BigInt::zero();
        for m in (0..delta).rev() {
            acc <<= 1;
            match (self.bit(m), other.bit(m)) {
                (false, true) => acc += 1,
                (true, false) => acc -= 1,
                _ => {}
            }
        }
        Ok(acc)
    }

    /// Same as [`EvpSeq::integer_difference`] when the difference fits in an
    /// `i128`; `None` when the points are unrelated or too far apart.
    pub fn small_difference(&self, other: &EvpSeq) -> Option<i128> {
        let delta = self.delta(other).ok()?;
        if delta > 120 {
            return self.integer_difference(other).ok().and_then(|d| i128::try_from(d).ok());
        }
        let mut acc: i128 = 0;
        for m in (0..delta).rev() {
            acc <<= 1;
            acc += other.bit(m) as i128 - self.bit(m) as i128;
        }
        Some(acc)
    }

    /// Binary add-one with carry.
    pub fn odometer(&self) -> EvpSeq {
        self.carry(false)
    }

    /// Binary subtract-one with borrow.
    pub fn odometer_inverse(&self) -> EvpSeq {
        self.carry(true)
    }

    // Adding one turns the leading run of ones into zeros and the first zero
    // into a one; subtracting one is the same with the digits swapped.
    fn carry(&self, stop: bool) -> EvpSeq {
        let first = (0..self.prefix.len() + self.period.len()).find(|&m| self.bit(m) == stop);
        match first {
            None => {
                if stop {
                    EvpSeq::ones()
                } else {
                    EvpSeq::zeros()
                }
            }
            Some(k) => {
                let len = self.prefix.len().max(k + 1);
                let mut head = self.digits(len);
                for d in head.iter_mut().take(k) {
                    *d = stop;
                }
                head[k] = !stop;
                self.with_head(head)
            }
        }
    }

    /// Exact 2-adic value.
    pub fn to_rational(&self) -> TwoAdicRational {
        let p = self.prefix.len();
        let q = self.period.len();
        let head = bits_value(&self.prefix);
        let cycle = bits_value(&self.period);
        // val(prefix) + 2^p * val(period) / (1 - 2^q)
        let den = BigInt::one() - (BigInt::one() << q);
        let num = head * &den + (cycle << p);
        TwoAdicRational::new(num, den).expect("1 - 2^q is odd")
    }

    /// Inverse of [`EvpSeq::to_rational`], by long division with cycle detection.
    pub fn from_rational(value: &TwoAdicRational) -> EvpSeq {
        let den = &value.den;
        let mut num = value.num.clone();
        let mut seen: HashMap<BigInt, usize> = HashMap::new();
        let mut digits = Vec::new();
        loop {
            if let Some(&start) = seen.get(&num) {
                return canonicalize(&digits[..start], &digits[start..])
                    .expect("a repeated state closes a nonempty cycle");
            }
            seen.insert(num.clone(), digits.len());
            let bit = num.is_odd();
            digits.push(bit);
            if bit {
                num -= den;
            }
            num >>= 1;
        }
    }

    /// Lexicographic comparison by the first differing digit.
    pub fn lex_compare(&self, other: &EvpSeq) -> Ordering {
        let (n, l) = self.window(other);
        for m in 0..n + l {
            match (self.bit(m), other.bit(m)) {
                (false, true) => return Ordering::Less,
                (true, false) => return Ordering::Greater,
                _ => {}
            }
        }
        Ordering::Equal
    }
}

fn bits_value(bits: &[bool]) -> BigInt {
    bits.iter().rev().fold(BigInt::zero(), |acc, &b| (acc << 1) + u8::from(b))
}

fn write_bits(f: &mut fmt::Formatter<'_>, bits: &[bool]) -> fmt::Result {
    for &b in bits {
        f.write_str(if b { "1" } else { "0" })?;
    }
    Ok(())
}

fn parse_bits(s: &str, literal: &str) -> Result<Vec<bool>, SeqError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(SeqError::Parse(literal.to_string(), "digits must be 0 or 1")),
        })
        .collect()
}

impl Ord for EvpSeq {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lex_compare(other)
    }
}

impl PartialOrd for EvpSeq {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Literal form `prefix|period`, with `e` for an empty prefix.
impl fmt::Display for EvpSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.prefix.is_empty() {
            f.write_str("e")?;
        } else {
            write_bits(f, &self.prefix)?;
        }
        f.write_str("|")?;
        write_bits(f, &self.period)
    }
}

impl fmt::Debug for EvpSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EvpSeq({self})")
    }
}

impl FromStr for EvpSeq {
    type Err = SeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, tail) = s
            .trim()
            .split_once('|')
            .ok_or_else(|| SeqError::Parse(s.to_string(), "expected prefix|period"))?;
        let prefix = if head == "e" { Vec::new() } else { parse_bits(head, s)? };
        let period = parse_bits(tail, s)?;
        if period.is_empty() {
            return Err(SeqError::EmptyPeriod);
        }
        canonicalize(&prefix, &period)
    }
}

impl Serialize for EvpSeq {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EvpSeq {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An element of the group of finite subsets of ℕ under symmetric difference,
/// acting on sequences by flipping digits.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteFlip {
    positions: BTreeSet<usize>,
}

impl FiniteFlip {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_positions<I: IntoIterator<Item = usize>>(positions: I) -> Self {
        let mut g = Self::default();
        for p in positions {
            g.toggle(p);
        }
        g
    }

    /// `g_i`: the positions of the one bits of `i`.
    pub fn from_index(i: u64) -> Self {
        FiniteFlip { positions: (0..64).filter(|b| i >> b & 1 == 1).collect() }
    }

    /// Inverse of [`FiniteFlip::from_index`], when every position is below 64.
    pub fn index(&self) -> Option<u64> {
        self.positions.iter().try_fold(0u64, |acc, &p| (p < 64).then(|| acc | 1 << p))
    }

    pub fn toggle(&mut self, pos: usize) {
        if !self.positions.remove(&pos) {
            self.positions.insert(pos);
        }
    }

    /// Group product: symmetric difference.
    pub fn compose(&self, other: &FiniteFlip) -> FiniteFlip {
        FiniteFlip {
            positions: self.positions.symmetric_difference(&other.positions).copied().collect(),
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.positions.iter().copied()
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.positions.contains(&pos)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Membership in the index-two subgroup of even-size flips.
    pub fn is_even(&self) -> bool {
        self.positions.len().is_multiple_of(2)
    }
}

/// `g_i` of the fixed enumeration of the flip group, with `g_0` the identity.
pub fn flip_enumeration(i: u64) -> FiniteFlip {
    FiniteFlip::from_index(i)
}

/// A rational number with odd denominator, i.e. a 2-adic integer with an
/// eventually periodic expansion. Always in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TwoAdicRational {
    num: BigInt,
    den: BigInt,
}

impl TwoAdicRational {
    pub fn new(num: BigInt, den: BigInt) -> Result<Self, SeqError> {
        if den.is_zero() || den.is_even() {
            return Err(SeqError::EvenDenominator(den));
        }
        let (mut num, mut den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        let g = num.gcd(&den);
        if !g.is_one() {
            num /= &g;
            den /= &g;
        }
        Ok(TwoAdicRational { num, den })
    }

    pub fn from_integer<T: Into<BigInt>>(n: T) -> Self {
        TwoAdicRational { num: n.into(), den: BigInt::one() }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn add(&self, other: &TwoAdicRational) -> TwoAdicRational {
        Self::new(&self.num * &other.den + &other.num * &self.den, &self.den * &other.den)
            .expect("product of odd denominators is odd")
    }

    pub fn sub(&self, other: &TwoAdicRational) -> TwoAdicRational {
        self.add(&TwoAdicRational { num: -&other.num, den: other.den.clone() })
    }

    pub fn is_integer(&self) -> bool {
        self.den.is_one()
    }

    pub fn signum(&self) -> Sign {
        self.num.sign()
    }
}

impl fmt::Display for TwoAdicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn seq(s: &str) -> EvpSeq {
        s.parse().unwrap()
    }

    /// Expansion oracle: the first `len` digits of `prefix · period^ω` read
    /// straight off the raw words.
    fn expand(prefix: &str, period: &str, len: usize) -> Vec<bool> {
        let p = bits(prefix);
        let q = bits(period);
        (0..len).map(|n| if n < p.len() { p[n] } else { q[(n - p.len()) % q.len()] }).collect()
    }

    #[test]
    fn canonicalize_examples() {
        let c = canonicalize(&bits("01"), &bits("0101")).unwrap();
        assert_eq!(c.to_string(), "e|01");
        assert_eq!(c.digits(16), expand("01", "0101", 16));

        assert_eq!(canonicalize(&[], &bits("0")).unwrap().to_string(), "e|0");

        let c = canonicalize(&bits("1"), &bits("1")).unwrap();
        assert_eq!(c.to_string(), "e|1");
        assert_eq!(c.digits(16), expand("1", "1", 16));
    }

    #[test]
    fn canonicalize_rejects_empty_period() {
        assert_eq!(canonicalize(&bits("01"), &[]), Err(SeqError::EmptyPeriod));
        assert!("01|".parse::<EvpSeq>().is_err());
    }

    #[test]
    fn bit_at_examples() {
        assert!(!seq("e|0").bit(7));
        assert!(seq("10|01").bit(0));
        assert_eq!(seq("10|01").digits(6), bits("100101"));
        assert!(seq("10|01").bit(3));
    }

    #[test]
    fn e0_examples() {
        let x = seq("10|01");
        assert!(x.e0_related(&x));
        assert!(!seq("e|0").e0_related(&seq("e|1")));
        assert!(x.e0_related(&seq("01|01")));
    }

    #[test]
    fn delta_examples() {
        let x = seq("10|01");
        assert_eq!(x.delta(&x), Ok(0));
        assert_eq!(x.delta(&seq("01|01")), Ok(2));
        assert_eq!(seq("e|1").delta(&seq("0|1")), Ok(1));
        assert!(matches!(seq("e|0").delta(&seq("e|1")), Err(SeqError::NotRelated(..))));
    }

    #[test]
    fn act_examples() {
        let x = seq("10|01");
        assert_eq!(x.act(&FiniteFlip::identity()), x);
        assert_eq!(seq("e|1").act(&FiniteFlip::from_positions([0])), seq("0|1"));
        let y = seq("0000|1").act(&FiniteFlip::from_positions([1, 3]));
        // 0101·1^ω; canonical form absorbs the trailing one of the prefix
        assert_eq!(y, canonicalize(&bits("0101"), &bits("1")).unwrap());
        assert_eq!(y.digits(10), expand("0101", "1", 10));
        assert_eq!(y.to_string(), "010|1");
    }

    #[test]
    fn flip_difference_examples() {
        let x = seq("10|01");
        assert!(x.flip_difference(&x).unwrap().is_empty());
        assert_eq!(
            seq("e|1").flip_difference(&seq("0|1")).unwrap(),
            FiniteFlip::from_positions([0])
        );
        assert_eq!(
            x.flip_difference(&seq("01|01")).unwrap(),
            FiniteFlip::from_positions([0, 1])
        );
    }

    #[test]
    fn integer_difference_examples() {
        let x = seq("10|01");
        assert_eq!(x.integer_difference(&x).unwrap(), BigInt::zero());
        assert_eq!(seq("e|0").integer_difference(&seq("101|0")).unwrap(), BigInt::from(5));
        assert_eq!(seq("1|0").integer_difference(&seq("e|0")).unwrap(), BigInt::from(-1));
        assert_eq!(seq("1|0").small_difference(&seq("e|0")), Some(-1));
        assert!(seq("e|0").integer_difference(&seq("e|1")).is_err());
    }

    #[test]
    fn odometer_examples() {
        assert_eq!(seq("e|0").odometer(), seq("1|0"));
        assert_eq!(seq("11|0").odometer(), seq("001|0"));
        assert_eq!(seq("e|1").odometer(), seq("e|0"));
        assert_eq!(seq("e|0").odometer_inverse(), seq("e|1"));
        assert_eq!(seq("001|0").odometer_inverse(), seq("11|0"));
    }

    #[test]
    fn rational_examples() {
        assert_eq!(seq("e|0").to_rational(), TwoAdicRational::from_integer(0));
        assert_eq!(seq("e|1").to_rational(), TwoAdicRational::from_integer(-1));
        let two_thirds = TwoAdicRational::new(BigInt::from(-2), BigInt::from(3)).unwrap();
        assert_eq!(seq("e|01").to_rational(), two_thirds);
        assert_eq!(EvpSeq::from_rational(&two_thirds), seq("e|01"));
        assert_eq!(EvpSeq::from_rational(&TwoAdicRational::from_integer(-1)), seq("e|1"));
        assert_eq!(EvpSeq::from_rational(&TwoAdicRational::from_integer(5)), seq("101|0"));
    }

    #[test]
    fn even_denominator_rejected() {
        assert!(matches!(
            TwoAdicRational::new(BigInt::one(), BigInt::from(4)),
            Err(SeqError::EvenDenominator(_))
        ));
        assert!(TwoAdicRational::new(BigInt::one(), BigInt::zero()).is_err());
    }

    #[test]
    fn lex_examples() {
        let x = seq("10|01");
        assert_eq!(x.lex_compare(&x), Ordering::Equal);
        assert_eq!(seq("e|0").lex_compare(&seq("1|0")), Ordering::Less);
        assert_eq!(seq("01|01").lex_compare(&seq("10|01")), Ordering::Less);
    }

    #[test]
    fn flip_enumeration_examples() {
        assert!(flip_enumeration(0).is_empty());
        assert_eq!(flip_enumeration(1), FiniteFlip::from_positions([0]));
        assert_eq!(flip_enumeration(5), FiniteFlip::from_positions([0, 2]));
        assert_eq!(flip_enumeration(5).index(), Some(5));
    }

    #[test]
    fn literal_roundtrip_and_errors() {
        for lit in ["e|0", "e|1", "10|01", "0|1", "001|0"] {
            assert_eq!(seq(lit).to_string(), lit);
        }
        assert!("10".parse::<EvpSeq>().is_err());
        assert!("1x|0".parse::<EvpSeq>().is_err());
    }
}
