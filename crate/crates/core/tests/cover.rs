use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectra_core::complex::{EntourageGroup, DEFAULT_BUDGET};
use spectra_core::cover::{build_cover_ball, covers_equivalent, CoverEquivalence};
use spectra_core::{base_entourage, metric_entourage, Entourage, FiniteMetricSpace, GeneratorSpec, Rational};

fn space(spec: &str) -> FiniteMetricSpace {
    FiniteMetricSpace::generate(&spec.parse::<GeneratorSpec>().unwrap()).unwrap()
}

fn closed(s: &FiniteMetricSpace, p: i64, q: i64) -> Entourage {
    metric_entourage(s, Rational::new(p, q), false).unwrap()
}

fn r(p: i64, q: i64) -> Rational {
    Rational::new(p, q)
}

fn triangle() -> FiniteMetricSpace {
    let one = Rational::from_integer(1);
    let z = Rational::from_integer(0);
    FiniteMetricSpace::from_distance_matrix(vec![vec![z, one, one], vec![one, z, one], vec![one, one, z]]).unwrap()
}

#[test]
fn triangle_cover_is_itself() {
    let t = triangle();
    let cb = build_cover_ball(&Entourage::full(&t), r(10, 1)).unwrap();
    assert_eq!(cb.len(), 3);
}

#[test]
fn fine_circle_cover_unrolls() {
    let c = space("circle:n=12,L=1");
    let cb = build_cover_ball(&closed(&c, 1, 6), r(3, 2)).unwrap();
    let mut d: Vec<Rational> = cb.fiber(0).iter().map(|&i| cb.point(i).distance).collect();
    d.sort();
    assert_eq!(d, vec![r(0, 1), r(1, 1), r(1, 1)]);
    // the ball of a line segment of half-length 3/2 in steps of 1/12
    assert_eq!(cb.len(), 37);
    let lifts = cb.fiber(0);
    let far = lifts.iter().copied().find(|&i| i != 0).unwrap();
    let ld = cb.lifted_distance(0, far).unwrap();
    assert_eq!(ld.value, r(1, 1));
    assert!(ld.exact);
}

#[test]
fn coarse_circle_cover_is_trivial() {
    let c = space("circle:n=12,L=1");
    let cb = build_cover_ball(&closed(&c, 2, 5), r(10, 1)).unwrap();
    assert_eq!(cb.len(), 12);
}

#[test]
fn lifting_loops() {
    let c = space("circle:n=12,L=1");
    let e = closed(&c, 1, 6);
    let cb = build_cover_ball(&e, r(3, 2)).unwrap();
    assert_eq!(cb.lift_chain(&[0, 0, 0], 0).unwrap(), vec![0, 0, 0]);
    let full: Vec<usize> = (0..12).chain([0]).collect();
    let lift = cb.lift_chain(&full, 0).unwrap();
    let end = *lift.last().unwrap();
    assert_ne!(end, 0);
    assert_eq!(cb.point(end).vertex, 0);
    // a null loop lifts closed
    let g = EntourageGroup::new(&e).unwrap();
    let lp = vec![0, 2, 1, 0];
    assert!(g.decide_null(&lp, DEFAULT_BUDGET).unwrap().is_null());
    assert_eq!(*cb.lift_chain(&lp, 0).unwrap().last().unwrap(), 0);
    assert!(cb.lift_chain(&[1, 2], 0).is_err());
}

#[test]
fn lifted_edges_are_isometric_and_fibers_regular() {
    for (spec, p, q, rad) in [
        ("circle:n=12,L=1", 1, 6, r(2, 1)),
        ("torus:p=6,q=6,Lx=1,Ly=1", 1, 6, r(3, 2)),
        ("wedge:L=1;3/2,nodes=8;12", 1, 8, r(2, 1)),
        ("wedge:L=1;3/2,nodes=8;12", 3, 8, r(3, 1)),
    ] {
        let s = space(spec);
        let cb = build_cover_ball(&closed(&s, p, q), rad).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (i, j) in cb.edges() {
            let (a, b) = (cb.point(i).vertex, cb.point(j).vertex);
            assert_ne!(a, b);
            assert!(cb.entourage().contains(a, b));
            if rng.gen_bool(0.1) {
                let ld = cb.lifted_distance(i, j).unwrap();
                assert_eq!(ld.value, s.dist(a, b));
            }
        }
        // lifted neighbours of a point project injectively
        for i in 0..cb.len() {
            let mut seen: Vec<usize> = cb.neighbors(i).iter().map(|&j| cb.point(j).vertex).collect();
            let k = seen.len();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), k);
        }
        let inner = rad - s.diameter();
        let full: Vec<usize> = (0..s.len()).map(|v| cb.fiber(v).len()).collect();
        if inner > Rational::from_integer(0) {
            // each basepoint lift deep inside the ball has a lift of every vertex within one diameter
            let base = cb.fiber(0).iter().filter(|&&i| cb.point(i).distance <= inner).count();
            assert!(full.iter().all(|&k| k >= base), "{spec}: {full:?}");
        }
    }
}

#[test]
fn deck_action_is_consistent() {
    let c = space("circle:n=12,L=1");
    let e = closed(&c, 1, 6);
    let cb = build_cover_ball(&e, r(3, 1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        // loop at 0 then a chain from 0
        let k = rng.gen_range(1..3);
        let mut lp = vec![0];
        for _ in 0..k * 6 {
            let u = *lp.last().unwrap();
            lp.push((u + 2) % 12);
        }
        let mut alpha = vec![0];
        for _ in 0..rng.gen_range(1..8) {
            let u: usize = *alpha.last().unwrap();
            alpha.push((u + [1, 2, 11, 10][rng.gen_range(0..4)]) % 12);
        }
        let a = cb.lift_chain(&lp, 0).unwrap();
        let then = cb.lift_chain(&alpha, *a.last().unwrap()).unwrap();
        let joint: Vec<usize> = lp.iter().chain(&alpha[1..]).copied().collect();
        let both = cb.lift_chain(&joint, 0).unwrap();
        assert_eq!(then.last(), both.last());
    }
}

#[test]
fn circle_cover_equivalences() {
    let c = space("circle:n=60,L=1");
    let e = closed(&c, 1, 5);
    assert_eq!(covers_equivalent(&e, &e).unwrap(), CoverEquivalence::Equivalent);
    assert_eq!(covers_equivalent(&e, &closed(&c, 1, 4)).unwrap(), CoverEquivalence::Equivalent);
    assert!(matches!(
        covers_equivalent(&closed(&c, 1, 4), &closed(&c, 2, 5)).unwrap(),
        CoverEquivalence::Inequivalent { .. }
    ));
}

#[test]
fn circle_covers_are_trivial_or_universal() {
    let c = space("circle:n=12,L=1");
    let base = base_entourage(&c);
    let full = Entourage::full(&c);
    for k in 1..=12 {
        for strict in [false, true] {
            let Ok(e) = metric_entourage(&c, r(k, 12), strict) else { continue };
            if e.is_identity() {
                continue;
            }
            let a = covers_equivalent(&e, &base).unwrap() == CoverEquivalence::Equivalent;
            let b = covers_equivalent(&e, &full).unwrap() == CoverEquivalence::Equivalent;
            assert!(a ^ b, "{k}/12 strict={strict}: universal={a} trivial={b}");
        }
    }
}
