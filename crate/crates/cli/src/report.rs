use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use ramsey_lab::{Point, ENGINE_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engines::run_seed;
use crate::scenario::Scenario;

pub const REPORT_FORMAT: &str = "ramsey-lab-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    FuelExhausted,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: Point,
    pub status: Status,
    pub steps: u64,
    pub warnings: Vec<String>,
    pub detail: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub fuel_exhausted: usize,
    pub error: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    pub seed_ms: Vec<f64>,
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub engine_version: String,
    pub scenario: Scenario,
    pub results: Vec<SeedResult>,
    pub summary: Summary,
    pub timing: Timing,
}

impl Report {
    /// 0 when everything passed, 2 when the only shortfalls are fuel, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        let s = &self.summary;
        if s.fail > 0 || s.error > 0 {
            1
        } else if s.fuel_exhausted > 0 {
            2
        } else {
            0
        }
    }

    /// The report as JSON without the timing block.
    pub fn stable_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        v.as_object_mut().expect("object").remove("timing");
        serde_json::to_string_pretty(&v).expect("reports serialize")
    }
}

/// Runs every seed of `scenario` on up to `jobs` threads.
pub fn run(scenario: &Scenario, jobs: usize) -> Report {
    let start = Instant::now();
    let seeds = scenario.seed_points();
    let slots: Mutex<Vec<Option<(SeedResult, f64)>>> = Mutex::new(vec![None; seeds.len()]);
    let next = AtomicUsize::new(0);
    let jobs = jobs.clamp(1, seeds.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let t = Instant::now();
                let r = run_seed(scenario, i, &seeds[i]);
                let ms = t.elapsed().as_secs_f64() * 1e3;
                slots.lock().expect("no poisoned workers")[i] = Some((r, ms));
            });
        }
    });
    let (results, seed_ms): (Vec<SeedResult>, Vec<f64>) =
        slots.into_inner().expect("no poisoned workers").into_iter().map(|r| r.expect("every seed ran")).unzip();
    let mut summary = Summary { total: results.len(), ..Summary::default() };
    for r in &results {
        match r.status {
            Status::Pass => summary.pass += 1,
            Status::Fail => summary.fail += 1,
            Status::FuelExhausted => summary.fuel_exhausted += 1,
            Status::Error => summary.error += 1,
        }
    }
    Report {
        format: REPORT_FORMAT.to_string(),
        engine_version: ENGINE_VERSION.to_string(),
        scenario: scenario.clone(),
        results,
        summary,
        timing: Timing { total_ms: start.elapsed().as_secs_f64() * 1e3, seed_ms, jobs },
    }
}
