use ramsey_lab::{Coloring, Point, Space};
use serde::Deserialize;

use crate::{subsets, Digits, OracleError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertVerdict {
    Pass { points: usize, hyperedges: usize },
    Fail(String),
}

impl CertVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, CertVerdict::Pass { .. })
    }
}

#[derive(Deserialize)]
struct CertFile {
    points: Vec<Point>,
    color: u32,
    coloring: Coloring,
    backend: Space,
}

pub fn verify_cert_json(text: &str) -> Result<CertVerdict, OracleError> {
    let cert: CertFile = serde_json::from_str(text)?;
    verify_cert(&cert.points, cert.color, &cert.coloring, &cert.backend)
}

enum Shape {
    Seq(Digits),
    Class(String, u64),
}

fn shape(p: &Point) -> Result<Shape, OracleError> {
    let lit = p.to_string();
    if lit.contains('|') {
        return Ok(Shape::Seq(Digits::parse(&lit)?));
    }
    let (class, index) = lit.rsplit_once(':').ok_or(OracleError::Parse(lit.clone(), "expected class:index"))?;
    let index = index.parse().map_err(|_| OracleError::Parse(lit.clone(), "bad index"))?;
    Ok(Shape::Class(class.to_string(), index))
}

/// Same class and pairwise distinct, then every `n`-subset gets `color`.
pub fn verify_cert(points: &[Point], color: u32, coloring: &Coloring, backend: &Space) -> Result<CertVerdict, OracleError> {
    let shapes = points.iter().map(shape).collect::<Result<Vec<_>, _>>()?;
    for i in 0..shapes.len() {
        for j in i + 1..shapes.len() {
            let (related, equal) = match (&shapes[i], &shapes[j]) {
                (Shape::Seq(x), Shape::Seq(y)) => match x.diff(y) {
                    Some(d) => (true, d.is_empty()),
                    None => (false, false),
                },
                (Shape::Class(a, m), Shape::Class(b, n)) => (a == b, a == b && m == n),
                _ => (false, false),
            };
            if !related {
                return Ok(CertVerdict::Fail(format!("{} and {} lie in different classes", points[i], points[j])));
            }
            if equal {
                return Ok(CertVerdict::Fail(format!("{} is listed twice", points[i])));
            }
        }
    }
    let n = coloring.dim();
    let mut hyperedges = 0;
    for s in subsets(points.len(), n) {
        let set: Vec<Point> = s.iter().map(|&i| points[i].clone()).collect();
        match coloring.color(backend, &set) {
            Ok(c) if c == color => hyperedges += 1,
            Ok(c) => {
                let names: Vec<String> = set.iter().map(|p| p.to_string()).collect();
                return Ok(CertVerdict::Fail(format!("{{{}}} has color {c}, not {color}", names.join(", "))));
            }
            Err(e) => return Ok(CertVerdict::Fail(format!("coloring failed: {e}"))),
        }
    }
    Ok(CertVerdict::Pass { points: points.len(), hyperedges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(s: &[&str]) -> Vec<Point> {
        s.iter().map(|p| p.parse().unwrap()).collect()
    }

    #[test]
    fn parity_certificates() {
        let e0 = Space::E0;
        let good = pts(&["e|01", "10|01", "1111|01"]);
        assert_eq!(
            verify_cert(&good, 1, &Coloring::Parity, &e0).unwrap(),
            CertVerdict::Pass { points: 3, hyperedges: 3 }
        );
        assert!(!verify_cert(&pts(&["e|01", "11|01"]), 1, &Coloring::Parity, &e0).unwrap().passed());
        assert!(!verify_cert(&pts(&["e|01", "e|10"]), 1, &Coloring::Parity, &e0).unwrap().passed());
    }

    #[test]
    fn smooth_certificates() {
        let sm = Space::smooth(["c", "d"]);
        let c = Coloring::constant(3, 2, 2).unwrap();
        assert!(verify_cert(&pts(&["c:0", "c:1", "c:7"]), 2, &c, &sm).unwrap().passed());
        assert!(!verify_cert(&pts(&["c:0", "d:1", "c:7"]), 2, &c, &sm).unwrap().passed());
        assert!(!verify_cert(&pts(&["c:0", "c:0", "c:7"]), 2, &c, &sm).unwrap().passed());
        assert!(!verify_cert(&pts(&["c:0", "c:1", "c:7"]), 1, &c, &sm).unwrap().passed());
    }
}
