use itertools::Itertools;
use proptest::prelude::*;
use ramsey_lab::colorings::parity_color;
use ramsey_lab::*;

const FUEL: u64 = 1 << 26;

fn p(s: &str) -> Point {
    s.parse().unwrap()
}

// every n-subset, evaluated directly
fn monochromatic(space: &Space, c: &Coloring, pts: &[Point], color: Color) -> bool {
    pts.iter().all_unique()
        && pts.iter().all(|q| space.related(&pts[0], q).unwrap())
        && pts.iter().cloned().combinations(c.dim()).all(|s| c.color(space, &s).unwrap() == color)
}

fn anchors() -> impl Strategy<Value = Point> {
    prop_oneof![
        Just(p("e|01")),
        Just(p("1|011")),
        Just(p("0110|1100")),
        Just(p("e|001")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certificates_are_monochromatic(seed in 0u64..10_000, n in 2usize..=3, k in 2u32..=3, anchor in anchors()) {
        let e0 = Space::E0;
        let c = Coloring::random(seed, n, k).unwrap();
        let cert = extract_monochromatic(&e0, &c, &anchor, 8, 64, FUEL).unwrap();
        prop_assert!(cert.verified);
        prop_assert_eq!(cert.points.len(), 8);
        prop_assert!(monochromatic(&e0, &c, &cert.points, cert.color));
    }

    #[test]
    fn certificates_are_deterministic_and_prefix_consistent(seed in 0u64..10_000, n in 2usize..=3) {
        let e0 = Space::E0;
        let c = Coloring::random(seed, n, 2).unwrap();
        let a = extract_monochromatic(&e0, &c, &p("e|01"), 6, 32, FUEL).unwrap();
        let b = extract_monochromatic(&e0, &c, &p("e|01"), 6, 32, FUEL).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let longer = extract_monochromatic(&e0, &c, &p("e|01"), 7, 32, FUEL).unwrap();
        prop_assert_eq!(&longer.points[..6], &a.points[..]);
        prop_assert_eq!(longer.color, a.color);
    }

    #[test]
    fn smooth_certificates_ignore_the_anchor(seed in 0u64..10_000, n in 2usize..=3, k in 2u32..=3) {
        let sm = Space::smooth(["c", "d"]);
        let c = Coloring::random(seed, n, k).unwrap();
        let base = extract_monochromatic(&sm, &c, &p("c:0"), 8, 64, FUEL).unwrap();
        prop_assert!(monochromatic(&sm, &c, &base.points, base.color));
        for anchor in ["c:3", "c:9", "c:117"] {
            let other = extract_monochromatic(&sm, &c, &p(anchor), 8, 64, FUEL).unwrap();
            prop_assert_eq!(&other.points, &base.points);
            prop_assert_eq!(other.color, base.color);
        }
        let d = extract_monochromatic(&sm, &c, &p("d:4"), 8, 64, FUEL).unwrap();
        prop_assert!(d.points.iter().all(|q| q.as_indexed().unwrap().class == "d"));
    }
}

#[test]
fn parity_certificates_follow_the_anchor() {
    let e0 = Space::E0;
    let x: EvpSeq = "e|011".parse().unwrap();
    let first = |anchor: &EvpSeq| {
        let cert = extract_monochromatic(&e0, &Coloring::Parity, &anchor.clone().into(), 6, 64, FUEL).unwrap();
        assert_eq!(cert.color, 1);
        let seqs: Vec<EvpSeq> = cert.points.iter().map(|q| q.as_seq().unwrap().clone()).collect();
        for (a, b) in seqs.iter().tuple_combinations() {
            assert_eq!(parity_color(a, b).unwrap(), 1);
        }
        seqs[0].clone()
    };
    let base = first(&x);
    for i in 1..32 {
        let g = FiniteFlip::from_index(i);
        let other = first(&x.act(&g));
        assert_eq!(other == base || parity_color(&base, &other).unwrap() == 1, g.is_even());
    }
}

#[test]
fn pushed_sections_stay_inside() {
    let e0 = Space::E0;
    let y: Section = "bit[0]=1".parse().unwrap();
    let cert = push_section(&e0, &y, &Coloring::Parity, &p("e|01"), 4, 64, FUEL).unwrap();
    assert_eq!(cert.points.len(), 4);
    assert!(cert.points.iter().all(|q| q.as_seq().unwrap().bit(0)));
    assert!(monochromatic(&e0, &Coloring::Parity, &cert.points, cert.color));
    let all = push_section(&e0, &Section::All, &Coloring::Parity, &p("e|01"), 4, 64, FUEL).unwrap();
    let plain = extract_monochromatic(&e0, &Coloring::Parity, &p("e|01"), 4, 64, FUEL).unwrap();
    assert_eq!(all.points, plain.points);
}

#[test]
fn missing_sections_run_out_of_fuel() {
    let sm = Space::smooth(["c", "d"]);
    let y: Section = "class[d:0]".parse().unwrap();
    let err = push_section(&sm, &y, &Coloring::Adjacency, &p("c:0"), 4, 16, 500).unwrap_err();
    assert!(matches!(err, RamseyError::FuelExhausted { .. }));
}
