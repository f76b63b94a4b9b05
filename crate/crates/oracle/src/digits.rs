use std::fmt;

use crate::OracleError;

/// The sequence `prefix · period^ω`, with no normal form.
#[derive(Clone, Debug)]
pub struct Digits {
    prefix: Vec<bool>,
    period: Vec<bool>,
}

fn bits(s: &str, whole: &str) -> Result<Vec<bool>, OracleError> {
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(OracleError::Parse(whole.to_string(), "digits must be 0 or 1")),
        })
        .collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Digits {
    pub fn parse(s: &str) -> Result<Digits, OracleError> {
        let s = s.trim();
        let (head, tail) = s.split_once('|').ok_or(OracleError::Parse(s.to_string(), "expected prefix|period"))?;
        let prefix = if head == "e" { Vec::new() } else { bits(head, s)? };
        let period = bits(tail, s)?;
        if period.is_empty() {
            return Err(OracleError::Parse(s.to_string(), "empty period"));
        }
        Ok(Digits { prefix, period })
    }

    pub fn bit(&self, n: usize) -> bool {
        if n < self.prefix.len() {
            self.prefix[n]
        } else {
            self.period[(n - self.prefix.len()) % self.period.len()]
        }
    }

    /// Positions where the two sequences differ, or `None` if they differ
    /// infinitely often.
    pub fn diff(&self, other: &Digits) -> Option<Vec<usize>> {
        let start = self.prefix.len().max(other.prefix.len());
        let (a, b) = (self.period.len(), other.period.len());
        let span = a / gcd(a, b) * b;
        if (start..start + span).any(|n| self.bit(n) != other.bit(n)) {
            return None;
        }
        Some((0..start).filter(|&n| self.bit(n) != other.bit(n)).collect())
    }

    pub fn same(&self, other: &Digits) -> bool {
        self.diff(other).is_some_and(|d| d.is_empty())
    }

    pub fn flipped(&self, positions: &[usize]) -> Digits {
        let len = positions.iter().map(|p| p + 1).max().unwrap_or(0).max(self.prefix.len());
        let mut prefix: Vec<bool> = (0..len).map(|n| self.bit(n)).collect();
        for &p in positions {
            prefix[p] = !prefix[p];
        }
        let shift = (len - self.prefix.len()) % self.period.len();
        let period = (0..self.period.len()).map(|k| self.period[(k + shift) % self.period.len()]).collect();
        Digits { prefix, period }
    }

    /// `Σ (other(n) − self(n))·2^n` over the differing positions.
    pub fn offset_to(&self, other: &Digits) -> Result<i128, OracleError> {
        let d = self.diff(other).ok_or_else(|| OracleError::Unrelated(self.to_string(), other.to_string()))?;
        let mut total = 0i128;
        for n in d {
            if n > 120 {
                return Err(OracleError::TooFar(self.to_string(), other.to_string()));
            }
            total += if other.bit(n) { 1i128 << n } else { -(1i128 << n) };
        }
        Ok(total)
    }
}

impl fmt::Display for Digits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        let head = if self.prefix.is_empty() { "e".to_string() } else { show(&self.prefix) };
        write!(f, "{head}|{}", show(&self.period))
    }
}

/// The positions of the 1-bits of `i`.
pub fn flip_set(i: u64) -> Vec<usize> {
    (0..64).filter(|&k| i >> k & 1 == 1).collect()
}

/// `g_0·x, g_1·x, …, g_{count-1}·x`.
pub fn orbit(x: &Digits, count: u64) -> Vec<Digits> {
    (0..count).map(|i| x.flipped(&flip_set(i))).collect()
}
