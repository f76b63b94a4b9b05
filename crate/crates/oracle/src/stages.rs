use ramsey_lab::{Coloring, Point, Space};
use serde::Deserialize;

use crate::{subsets, Digits, OracleError};

#[derive(Deserialize)]
struct TraceFile {
    base: Point,
    backend: Space,
    coloring: Coloring,
    stages: Vec<StageFile>,
    chosen: Option<u32>,
    prefix: Vec<Point>,
}

#[derive(Deserialize)]
struct StageFile {
    index: usize,
    colors: Vec<ColorFile>,
}

#[derive(Deserialize)]
struct ColorFile {
    color: u32,
    status: Status,
    k: Option<Vec<Point>>,
}

#[derive(Deserialize)]
struct Status {
    status: String,
    value: Option<Point>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StageReport {
    /// Defined stage values rechecked against their recorded `K`.
    pub values: usize,
    /// Values whose `K` was too large to be recorded.
    pub skipped: usize,
    pub hyperedges: usize,
    pub failures: Vec<String>,
}

impl StageReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Position in the class's integer-like order, relative to `base`.
fn rank(base: &Point, p: &Point) -> Result<i128, OracleError> {
    let (b, q) = (base.to_string(), p.to_string());
    if b.contains('|') {
        return Digits::parse(&b)?.offset_to(&Digits::parse(&q)?);
    }
    let index = |lit: &str| -> Result<(String, i128), OracleError> {
        let (c, i) = lit.rsplit_once(':').ok_or(OracleError::Parse(lit.to_string(), "expected class:index"))?;
        let i: i128 = i.parse().map_err(|_| OracleError::Parse(lit.to_string(), "bad index"))?;
        Ok((c.to_string(), if i % 2 == 0 { i / 2 } else { -(i + 1) / 2 }))
    };
    let ((cb, rb), (cq, rq)) = (index(&b)?, index(&q)?);
    if cb != cq {
        return Err(OracleError::Unrelated(b, q));
    }
    Ok(rq - rb)
}

/// The largest rank, relative to `base`, in the stage-`i` block of `base`.
fn block_top(base: &Point, i: usize) -> Result<i128, OracleError> {
    let b = base.to_string();
    if b.contains('|') {
        let x = Digits::parse(&b)?;
        return Ok((0..i).filter(|&n| !x.bit(n)).map(|n| 1i128 << n).sum());
    }
    let (class, index) = b.rsplit_once(':').ok_or(OracleError::Parse(b.clone(), "expected class:index"))?;
    let index: u64 = index.parse().map_err(|_| OracleError::Parse(b.clone(), "bad index"))?;
    if index >= i as u64 {
        return Ok(0);
    }
    let mut top = i128::MIN;
    for j in 0..i as u64 {
        top = top.max(rank(base, &format!("{class}:{j}").parse().expect("literal"))?);
    }
    Ok(top)
}

fn check_set(coloring: &Coloring, backend: &Space, set: &[Point], a: u32, report: &mut StageReport, what: &str) {
    report.hyperedges += 1;
    match coloring.color(backend, set) {
        Ok(c) if c == a => {}
        Ok(c) => {
            let names: Vec<String> = set.iter().map(|p| p.to_string()).collect();
            report.failures.push(format!("{what}: {{{}}} has color {c}, not {a}", names.join(", ")));
        }
        Err(e) => report.failures.push(format!("{what}: {e}")),
    }
}

/// Rechecks every defined stage value of a trace against its recorded `K`,
/// its position above the block and `K`, and the emitted prefix.
pub fn verify_trace_json(text: &str) -> Result<StageReport, OracleError> {
    let trace: TraceFile = serde_json::from_str(text)?;
    let n = trace.coloring.dim();
    let mut report = StageReport::default();
    for stage in &trace.stages {
        if stage.index == 0 {
            continue;
        }
        let top = block_top(&trace.base, stage.index)?;
        for cs in &stage.colors {
            if cs.status.status != "defined" {
                continue;
            }
            let Some(v) = &cs.status.value else {
                report.failures.push(format!("stage {} color {}: defined without a value", stage.index, cs.color));
                continue;
            };
            let Some(k) = &cs.k else {
                report.skipped += 1;
                continue;
            };
            report.values += 1;
            let what = format!("stage {} color {}", stage.index, cs.color);
            let rv = rank(&trace.base, v)?;
            if rv <= top {
                report.failures.push(format!("{what}: {v} is not above the block"));
            }
            for w in k {
                if rank(&trace.base, w)? >= rv {
                    report.failures.push(format!("{what}: {v} is not above {w}"));
                }
            }
            for s in subsets(k.len(), n - 1) {
                let mut set = vec![v.clone()];
                set.extend(s.iter().map(|&i| k[i].clone()));
                check_set(&trace.coloring, &trace.backend, &set, cs.color, &mut report, &what);
            }
        }
    }
    if let Some(b) = trace.chosen {
        let p = &trace.prefix;
        for (i, x) in p.iter().enumerate() {
            for y in &p[i + 1..] {
                if rank(x, y)? == 0 {
                    report.failures.push(format!("prefix repeats {x}"));
                }
            }
        }
        if p.len() >= n {
            for s in subsets(p.len(), n) {
                let set: Vec<Point> = s.iter().map(|&i| p[i].clone()).collect();
                check_set(&trace.coloring, &trace.backend, &set, b, &mut report, "prefix");
            }
        }
    }
    Ok(report)
}
