//! Independent brute-force checks for ramsey-lab outputs.
//!
//! Sequences are handled through [`Digits`], a plain digit reader with its own
//! parser. Colorings are evaluated through `ramsey_lab::Coloring`, which is the
//! object being checked against; nothing here calls the extraction or
//! reduction engines.

mod cert;
mod digits;
mod parity;
mod stages;

pub use cert::{verify_cert, verify_cert_json, CertVerdict};
pub use digits::{flip_set, orbit, Digits};
pub use parity::{component_labels, find_color2_triple, parity, parity_blocks_match};
pub use stages::{verify_trace_json, StageReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("cannot parse {0:?}: {1}")]
    Parse(String, &'static str),
    #[error("bad input: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0} and {1} are not eventually equal")]
    Unrelated(String, String),
    #[error("difference of {0} and {1} is too large to rank")]
    TooFar(String, String),
}

/// All `r`-element index subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    go(0, n, r, &mut cur, &mut out);
    out
}
