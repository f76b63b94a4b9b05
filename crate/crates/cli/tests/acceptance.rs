use std::time::Instant;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ramsey_lab::colorings::{almost_transitivity_check, parity_color, parity_component};
use ramsey_lab::reduction::{check_stabilization, compare_e1, E1Agreement, ReductionOptions};
use ramsey_lab::seqspace::canonicalize;
use ramsey_lab::*;
use ramsey_lab_cli::scenario::random_seq;
use ramsey_lab_oracle as oracle;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<f64>, fn() -> Outcome);

fn seq(rng: &mut ChaCha8Rng) -> EvpSeq {
    random_seq(rng).as_seq().unwrap().clone()
}

fn flip(rng: &mut ChaCha8Rng, width: usize) -> FiniteFlip {
    FiniteFlip::from_index(rng.gen_range(0..1u64 << width))
}

fn digits(x: &EvpSeq) -> oracle::Digits {
    oracle::Digits::parse(&x.to_string()).unwrap()
}

fn same(a: &EvpSeq, b: &EvpSeq) -> bool {
    parity_component(a, b).unwrap()
}

fn parity_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    let triples = 10_000;
    for _ in 0..triples {
        let x = seq(&mut rng);
        let [a, b, c] = [0; 3].map(|_| x.act(&flip(&mut rng, 20)));
        for (u, v) in [(&a, &b), (&b, &c), (&a, &c)] {
            if same(u, v) != same(v, u) {
                violations += 1;
            }
            if u != v && oracle::parity(&digits(u), &digits(v)) != Some(parity_color(u, v).unwrap() as u8) {
                violations += 1;
            }
        }
        for (u, v, w) in [(&a, &b, &c), (&b, &c, &a), (&c, &a, &b), (&a, &c, &b), (&b, &a, &c), (&c, &b, &a)] {
            if same(u, v) && same(v, w) && !same(u, w) {
                violations += 1;
            }
        }
    }
    if violations == 0 {
        Ok(format!("0 violations in {triples} triples"))
    } else {
        Err(format!("{violations} violations in {triples} triples"))
    }
}

fn two_components() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    for class in 0..20 {
        let anchor = seq(&mut rng);
        let mut sample = vec![anchor.clone()];
        while sample.len() < 64 {
            let y = anchor.act(&flip(&mut rng, 16));
            if !sample.contains(&y) {
                sample.push(y);
            }
        }
        let mut blocks: Vec<Vec<&EvpSeq>> = Vec::new();
        for y in &sample {
            match blocks.iter_mut().find(|b| same(b[0], y)) {
                Some(b) => b.push(y),
                None => blocks.push(vec![y]),
            }
        }
        let follows_flip_parity = blocks.iter().all(|b| {
            b.iter().map(|y| anchor.flip_difference(y).unwrap().is_even()).all_equal()
        });
        let ds: Vec<oracle::Digits> = sample.iter().map(digits).collect();
        let labels = oracle::component_labels(&ds);
        let oracle_blocks = labels.iter().max().unwrap() + 1;
        if blocks.len() != 2 || !follows_flip_parity || oracle_blocks != 2 || !oracle::parity_blocks_match(&ds, &labels) {
            failures.push(format!("class {class} ({anchor}): {} blocks", blocks.len()));
        }
    }
    if failures.is_empty() {
        Ok("20 classes, 64 samples each: 2 blocks split by flip parity".into())
    } else {
        Err(failures.join("; "))
    }
}

fn clique_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut triples = 0;
    for _ in 0..10 {
        let x: Point = random_seq(&mut rng);
        let pts: Vec<EvpSeq> = Space::E0.omega_enumerate(&x).unwrap().take(32).map(|p| p.as_seq().unwrap().clone()).collect();
        let two = |a: &EvpSeq, b: &EvpSeq| parity_color(a, b).unwrap() == 2;
        for t in pts.iter().combinations(3) {
            triples += 1;
            if two(t[0], t[1]) && two(t[0], t[2]) && two(t[1], t[2]) {
                return Err(format!("color-2 triple {} {} {}", t[0], t[1], t[2]));
            }
        }
        let ds: Vec<oracle::Digits> = pts.iter().map(digits).collect();
        if let Some(t) = oracle::find_color2_triple(&ds) {
            return Err(format!("oracle found a color-2 triple at {t:?}"));
        }
    }
    Ok(format!("no color-2 triple among {triples} triples"))
}

fn gamma_one() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    for _ in 0..10 {
        let x = seq(&mut rng);
        for i in 0..256 {
            let g = FiniteFlip::from_index(i);
            let y = x.act(&g);
            let one = if i == 0 { same(&x, &y) } else { parity_color(&x, &y).unwrap() == 1 };
            if one != g.is_even() {
                failures += 1;
            }
        }
    }
    if failures == 0 {
        Ok("2560 flips: color 1 exactly for even flips".into())
    } else {
        Err(format!("{failures} failures"))
    }
}

fn certificates(colorings: &[Coloring], anchors: &[Point]) -> Result<String, String> {
    let (e0, sm) = (Space::E0, Space::smooth(["c"]));
    let mut out = String::new();
    for (c, a) in colorings.iter().zip(anchors) {
        for (space, anchor) in [(&e0, a.clone()), (&sm, Point::indexed("c", 0))] {
            let cert = extract_monochromatic(space, c, &anchor, 8, 64, 1 << 30).map_err(|e| format!("{c:?} at {anchor}: {e}"))?;
            let verdict = oracle::verify_cert(&cert.points, cert.color, &cert.coloring, &cert.backend).map_err(|e| e.to_string())?;
            if !cert.verified || !verdict.passed() {
                return Err(format!("{c:?} at {anchor}: {verdict:?}"));
            }
            out.push_str(&serde_json::to_string(&cert).unwrap());
            out.push('\n');
        }
    }
    Ok(out)
}

fn ramsey_engine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let colorings: Vec<Coloring> =
        (0..100).map(|i| Coloring::random(rng.gen(), 2 + i % 2, 2 + (i as u32 / 2) % 2).unwrap()).collect();
    let anchors: Vec<Point> = (0..100).map(|_| random_seq(&mut rng)).collect();
    let first = certificates(&colorings, &anchors)?;
    let second = certificates(&colorings, &anchors)?;
    if first != second {
        return Err("reports differ between runs".into());
    }
    let sm = Space::smooth(["c"]);
    for c in &colorings {
        let certs: Vec<Vec<Point>> = [0, 3, 9]
            .iter()
            .map(|&i| extract_monochromatic(&sm, c, &Point::indexed("c", i), 8, 64, 1 << 30).unwrap().points)
            .collect();
        if !certs.iter().all_equal() {
            return Err(format!("{c:?}: anchors c:0, c:3, c:9 disagree"));
        }
    }
    Ok(format!("200 certificates rechecked, {} report bytes identical, smooth anchors agree", first.len()))
}

fn exact_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let one = TwoAdicRational::from_integer(1);
    let mut failures = 0;
    for _ in 0..1000 {
        let prefix: Vec<bool> = (0..rng.gen_range(0..12)).map(|_| rng.gen()).collect();
        let period: Vec<bool> = (0..rng.gen_range(1..8)).map(|_| rng.gen()).collect();
        let x = canonicalize(&prefix, &period).unwrap();
        let ok = EvpSeq::from_rational(&x.to_rational()) == x
            && x.odometer().to_rational() == x.to_rational().add(&one)
            && x.odometer_inverse().odometer() == x
            && x.odometer().odometer_inverse() == x;
        if !ok {
            failures += 1;
        }
    }
    if failures == 0 {
        Ok("1000 sequences: 0 failures".into())
    } else {
        Err(format!("{failures} failures"))
    }
}

fn adjacency_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let e0 = Space::E0;
    let c = Coloring::Adjacency;
    let options = ReductionOptions { i_max: 12, fuel: 10_000, precheck_horizon: 64, k_record_limit: usize::MAX };
    let (mut stabilized, mut worst) = (0, 0);
    for _ in 0..10 {
        let x: Point = random_seq(&mut rng);
        let trace = build_reduction(&e0, &c, &x, &options).map_err(|e| e.to_string())?;
        if trace.chosen != Some(2) {
            return Err(format!("{x}: chose {:?}", trace.chosen));
        }
        let ds: Vec<oracle::Digits> = trace.prefix.iter().map(|p| digits(p.as_seq().unwrap())).collect();
        for (i, j) in (0..ds.len()).tuple_combinations() {
            let gap = ds[i].offset_to(&ds[j]).map_err(|e| e.to_string())?;
            if gap == 0 || gap.abs() == 1 || c.color(&e0, &[trace.prefix[i].clone(), trace.prefix[j].clone()]).unwrap() != 2 {
                return Err(format!("{x}: prefix entries {i} and {j} are equal or adjacent"));
            }
        }
        let report = oracle::verify_trace_json(&serde_json::to_string(&trace).unwrap()).map_err(|e| e.to_string())?;
        if !report.passed() || report.skipped > 0 {
            return Err(format!("{x}: stage recheck failed: {:?}", report.failures));
        }
        for _ in 0..3 {
            let j = rng.gen_range(0..=12);
            let i = rng.gen_range(j..=12);
            let y: Point = x.as_seq().unwrap().act(&flip(&mut rng, j)).into();
            if !check_stabilization(&e0, &c, &x, &y, j, i, 10_000).map_err(|e| e.to_string())? {
                return Err(format!("{x} and {y} differ at stage {i} though F_{j}-related"));
            }
            stabilized += 1;
        }
        let g = FiniteFlip::from_index(rng.gen_range(1..16));
        let y: Point = x.as_seq().unwrap().act(&g).into();
        let ty = build_reduction(&e0, &c, &y, &options).map_err(|e| e.to_string())?;
        match compare_e1(&trace.prefix, &ty.prefix).map_err(|e| e.to_string())? {
            E1Agreement::From(m) if m <= 4 => worst = worst.max(m),
            other => return Err(format!("{x} and {y}: {other:?}")),
        }
    }
    Ok(format!("10 traces choose color 2, {stabilized} stabilization checks hold, E1 agreement by index {worst}"))
}

fn negative_controls() -> Outcome {
    let e0 = Space::E0;
    let sm = Space::smooth(["c"]);
    let x: EvpSeq = "e|011".parse().unwrap();
    let orbit = |gs: &[u64]| -> Vec<Point> { gs.iter().map(|&i| x.act(&FiniteFlip::from_index(i)).into()).collect() };
    for horizon in [64, 128, 256] {
        for (n, k) in [(2, 2), (3, 3)] {
            let c = Coloring::constant(n, k, k).unwrap();
            for (space, a) in [(&e0, orbit(&[0, 1, 2, 3])), (&sm, (0..4).map(|i| Point::indexed("c", i)).collect())] {
                let r = almost_transitivity_check(space, &c, &a, &a[..n - 1], &a[1..n], horizon).map_err(|e| e.to_string())?;
                if r.verdict != Verdict::NoExceptions {
                    return Err(format!("constant {n}/{k}: {:?}", r.verdict));
                }
            }
        }
        let a = orbit(&[0, 1, 2, 5, 9]);
        for (b1, b2) in a.iter().tuple_combinations() {
            let r = almost_transitivity_check(&e0, &Coloring::Adjacency, &a, std::slice::from_ref(b1), std::slice::from_ref(b2), horizon).map_err(|e| e.to_string())?;
            if r.exceptions.len() > 4 {
                return Err(format!("adjacency: {} exceptions at horizon {horizon}", r.exceptions.len()));
            }
        }
        // flips {0} and {0,1} lie in different components
        let a = orbit(&[0, 1, 3]);
        let r = almost_transitivity_check(&e0, &Coloring::Parity, &a, &a[1..2], &a[2..3], horizon).map_err(|e| e.to_string())?;
        if r.verdict != Verdict::Persistent {
            return Err(format!("parity at horizon {horizon}: {:?}", r.verdict));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for t in 3..=8 {
        for _ in 0..4 {
            let anchor = random_seq(&mut rng);
            let cert = extract_monochromatic(&e0, &Coloring::Parity, &anchor, t, 64, 1 << 30).map_err(|e| e.to_string())?;
            let seqs: Vec<&EvpSeq> = cert.points.iter().map(|p| p.as_seq().unwrap()).collect();
            if cert.color != 1 || !seqs.iter().tuple_combinations().all(|(a, b)| same(a, b)) {
                return Err(format!("parity certificate at {anchor} escapes one component"));
            }
        }
    }
    Ok("constant: no exceptions; adjacency: at most 4; parity: persistent; 24 parity certificates trapped".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("parity algebra", Some(2.0), parity_algebra),
        ("two components per class", None, two_components),
        ("color-2 clique bound", Some(5.0), clique_bound),
        ("even flips keep color 1", None, gamma_one),
        ("ramsey soundness and determinism", Some(60.0), ramsey_engine),
        ("exact arithmetic", None, exact_arithmetic),
        ("adjacency reduction", Some(30.0), adjacency_reduction),
        ("negative controls", None, negative_controls),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let outcome = match (outcome, budget) {
            (Ok(msg), Some(b)) if secs >= b => Err(format!("{msg}, but took {secs:.2} s of {b} s")),
            (o, _) => o,
        };
        match outcome {
            Ok(msg) => println!("PASS [{}] {name}: {msg} ({secs:.2} s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{}] {name}: {msg} ({secs:.2} s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
