use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ramsey_lab::colorings::{parity_color, sample_almost_transitivity};
use ramsey_lab::ramsey::Extractor;
use ramsey_lab::reduction::ReductionOptions;
use ramsey_lab::{build_reduction, push_section, EvpSeq, FiniteFlip, Point, RamseyError, TwoAdicRational};
use ramsey_lab_oracle as oracle;
use serde_json::{json, Value};

use crate::report::{SeedResult, Status};
use crate::scenario::{Engine, Scenario};

fn outcome(status: Status, detail: Value, steps: u64, warnings: Vec<String>) -> (Status, Value, u64, Vec<String>) {
    (status, detail, steps, warnings)
}

fn error(e: impl std::fmt::Display) -> (Status, Value, u64, Vec<String>) {
    outcome(Status::Error, json!({ "error": e.to_string() }), 0, Vec::new())
}

pub fn run_seed(scenario: &Scenario, index: usize, seed: &Point) -> SeedResult {
    let (status, detail, steps, warnings) = match scenario.engine {
        Engine::Ramsey => ramsey(scenario, seed),
        Engine::Reduce => reduce(scenario, seed),
        Engine::CheckColoring => check_coloring(scenario, seed),
        Engine::Props => props(scenario, index, seed),
        Engine::Oracle => oracle_scan(scenario, seed),
    };
    SeedResult { seed: seed.clone(), status, steps, warnings, detail }
}

fn ramsey(s: &Scenario, seed: &Point) -> (Status, Value, u64, Vec<String>) {
    let c = s.coloring.as_ref().expect("validated");
    let p = &s.params;
    let (cert, steps) = match &s.section {
        Some(y) => (push_section(&s.backend, y, c, seed, p.t, p.horizon, p.fuel), 0),
        None => match Extractor::new(&s.backend, c, seed, p.horizon, p.fuel) {
            Ok(mut ex) => {
                let cert = ex.certificate(p.t);
                (cert, ex.steps())
            }
            Err(e) => (Err(e), 0),
        },
    };
    let cert = match cert {
        Ok(cert) => cert,
        Err(RamseyError::FuelExhausted { spent, partial }) => {
            return outcome(Status::FuelExhausted, json!({ "spent": spent, "partial": partial }), spent, Vec::new())
        }
        Err(e) => return error(e),
    };
    let verdict = match oracle::verify_cert(&cert.points, cert.color, &cert.coloring, &cert.backend) {
        Ok(v) => v,
        Err(e) => return error(e),
    };
    let (status, check) = match (&verdict, cert.verified) {
        (oracle::CertVerdict::Pass { hyperedges, .. }, true) => (Status::Pass, format!("pass: {hyperedges} hyperedges")),
        (oracle::CertVerdict::Pass { .. }, false) => (Status::Fail, "engine did not verify".to_string()),
        (oracle::CertVerdict::Fail(why), _) => (Status::Fail, format!("fail: {why}")),
    };
    let mut warnings = Vec::new();
    if cert.thin_evidence {
        warnings.push("a majority vote saw fewer elements than colors".to_string());
    }
    outcome(status, json!({ "certificate": cert, "oracle": check }), steps, warnings)
}

fn reduce(s: &Scenario, seed: &Point) -> (Status, Value, u64, Vec<String>) {
    let c = s.coloring.as_ref().expect("validated");
    let p = &s.params;
    let options = ReductionOptions { i_max: p.i_max, fuel: p.fuel, precheck_horizon: p.horizon, ..ReductionOptions::default() };
    let trace = match build_reduction(&s.backend, c, seed, &options) {
        Ok(t) => t,
        Err(e) => return error(e),
    };
    let report = match serde_json::to_string(&trace).map_err(|e| e.to_string()).and_then(|t| oracle::verify_trace_json(&t).map_err(|e| e.to_string())) {
        Ok(r) => r,
        Err(e) => return error(e),
    };
    let status = if !report.passed() || (trace.conclusive() && !trace.within_stream_injective) {
        Status::Fail
    } else if trace.conclusive() {
        Status::Pass
    } else {
        Status::FuelExhausted
    };
    let check = json!({ "values": report.values, "skipped": report.skipped, "hyperedges": report.hyperedges, "failures": report.failures });
    let (steps, warnings) = (trace.evaluations, trace.warnings.clone());
    outcome(status, json!({ "trace": trace, "oracle": check }), steps, warnings)
}

fn check_coloring(s: &Scenario, seed: &Point) -> (Status, Value, u64, Vec<String>) {
    let c = s.coloring.as_ref().expect("validated");
    match sample_almost_transitivity(&s.backend, c, seed, s.params.horizon) {
        Ok(reports) => {
            let steps = (reports.len() * s.params.horizon) as u64;
            outcome(Status::Pass, json!({ "reports": reports }), steps, Vec::new())
        }
        Err(e) => error(e),
    }
}

fn random_flip(rng: &mut ChaCha8Rng) -> FiniteFlip {
    FiniteFlip::from_index(rng.gen_range(1..1 << 16))
}

fn props(s: &Scenario, index: usize, seed: &Point) -> (Status, Value, u64, Vec<String>) {
    let Some(x) = seed.as_seq() else { return error("the props engine needs E0 seeds") };
    let mut rng = ChaCha8Rng::seed_from_u64(s.params.rng_seed.wrapping_add(index as u64));
    let one = TwoAdicRational::from_integer(1);
    let (mut checks, mut violations) = (0u64, Vec::new());
    let mut check = |ok: bool, what: String| {
        checks += 1;
        if !ok && violations.len() < 16 {
            violations.push(what);
        }
    };
    for _ in 0..s.params.samples {
        let (g, h, f) = (random_flip(&mut rng), random_flip(&mut rng), random_flip(&mut rng));
        let (a, b, c) = (x.act(&g), x.act(&h), x.act(&f));
        let same = |u: &EvpSeq, v: &EvpSeq| u == v || parity_color(u, v).map(|k| k == 1).unwrap_or(false);
        let transitive = !(same(&a, &b) && same(&b, &c)) || same(&a, &c);
        check(transitive, format!("color-1 transitivity fails on {a}, {b}, {c}"));
        check(same(x, &a) == g.is_even(), format!("flip law fails for {x} and {a}"));
        let back = EvpSeq::from_rational(&a.to_rational());
        check(back == a, format!("rational roundtrip fails for {a}"));
        check(a.odometer().to_rational() == a.to_rational().add(&one), format!("odometer adds more than one at {a}"));
        check(a.odometer().odometer_inverse() == a, format!("odometer inverse fails at {a}"));
    }
    let status = if violations.is_empty() { Status::Pass } else { Status::Fail };
    outcome(status, json!({ "checks": checks, "violations": violations }), checks, Vec::new())
}

fn oracle_scan(s: &Scenario, seed: &Point) -> (Status, Value, u64, Vec<String>) {
    let x = match oracle::Digits::parse(&seed.to_string()) {
        Ok(x) => x,
        Err(_) => return error("the oracle engine needs E0 seeds"),
    };
    let n = s.params.samples as u64;
    let pts = oracle::orbit(&x, n);
    let triple = oracle::find_color2_triple(&pts);
    let labels = oracle::component_labels(&pts);
    let blocks = labels.iter().max().map_or(0, |m| m + 1);
    let matches = oracle::parity_blocks_match(&pts, &labels);
    let status = if triple.is_none() && blocks == 2 && matches { Status::Pass } else { Status::Fail };
    let steps = n * (n - 1) * (n - 2) / 6;
    outcome(status, json!({ "color2_triple": triple, "components": blocks, "blocks_follow_flip_parity": matches }), steps, Vec::new())
}
