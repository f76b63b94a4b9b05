//! Shared inputs for the benchmarks.

use ramsey_lab::{Coloring, Point};

pub fn anchors() -> Vec<Point> {
    ["e|01", "1|011", "0110|1100", "c:0"].iter().map(|s| s.parse().expect("literal")).collect()
}

pub fn random_colorings() -> Vec<(String, Coloring)> {
    [(2, 2), (2, 3), (3, 2), (3, 3)]
        .into_iter()
        .map(|(n, k)| (format!("n{n}k{k}"), Coloring::random(17, n, k).expect("valid")))
        .collect()
}
