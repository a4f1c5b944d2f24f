use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectra_core::chains::{apply_move_points, concat, reverse, validate_chain, Move};
use spectra_core::complex::{
    build_presentation, decide_null, h1, kernel_generators, loop_word, EntourageGroup, Verdict, DEFAULT_BUDGET,
};
use spectra_core::complex::words::{inverse, reduce};
use spectra_core::{metric_entourage, Entourage, FiniteMetricSpace, GeneratorSpec, Rational};

fn space(spec: &str) -> FiniteMetricSpace {
    FiniteMetricSpace::generate(&spec.parse::<GeneratorSpec>().unwrap()).unwrap()
}

fn closed(s: &FiniteMetricSpace, p: i64, q: i64) -> Entourage {
    metric_entourage(s, Rational::new(p, q), false).unwrap()
}

fn circle_loop(n: usize) -> Vec<usize> {
    (0..n).chain([0]).collect()
}

#[test]
fn circle_base_presentation_counts() {
    let c = space("circle:n=12,L=1");
    let p = build_presentation(&closed(&c, 1, 12)).unwrap();
    assert_eq!(p.entourage().edge_count(), 12);
    assert_eq!(p.tree_edge_count(), 11);
    assert_eq!(p.generators().len(), 1);
    assert_eq!(p.triads().len(), 0);
    let lp = validate_chain(p.entourage(), &circle_loop(12)).unwrap();
    let w = loop_word(&p, &lp).unwrap();
    assert!(w == vec![1] || w == vec![-1], "{w:?}");
}

#[test]
fn circle_sixth_presentation() {
    let c = space("circle:n=12,L=1");
    let p = build_presentation(&closed(&c, 1, 6)).unwrap();
    assert_eq!(p.entourage().edge_count(), 24);
    assert_eq!(p.generators().len(), 13);
    assert_eq!(p.triads().len(), 12);
    let h = h1(&p).unwrap();
    assert_eq!((h.rank, h.torsion.clone()), (1, vec![]));
    let lp = validate_chain(p.entourage(), &circle_loop(12)).unwrap();
    let v = decide_null(&p, &lp, DEFAULT_BUDGET).unwrap();
    assert!(v.is_non_null(), "{v:?}");
}

#[test]
fn triangle_is_trivial() {
    let t = FiniteMetricSpace::from_distance_matrix(vec![
        vec![Rational::from_integer(0), Rational::from_integer(1), Rational::from_integer(1)],
        vec![Rational::from_integer(1), Rational::from_integer(0), Rational::from_integer(1)],
        vec![Rational::from_integer(1), Rational::from_integer(1), Rational::from_integer(0)],
    ])
    .unwrap();
    let p = build_presentation(&Entourage::full(&t)).unwrap();
    assert_eq!(p.entourage().edge_count(), 3);
    assert_eq!(p.generators().len(), 1);
    assert_eq!(p.triads().len(), 1);
    assert!(h1(&p).unwrap().is_trivial());
    assert!(p.group().is_trivial());
}

#[test]
fn torus_quarter_has_rank_two() {
    let t = space("torus:p=8,q=8,Lx=1,Ly=1");
    let p = build_presentation(&closed(&t, 1, 4)).unwrap();
    let h = h1(&p).unwrap();
    assert_eq!((h.rank, h.torsion.clone()), (2, vec![]));
    assert_eq!(p.group().model().h1().unwrap(), (2, vec![]));
}

#[test]
fn coarse_circle_loop_contracts() {
    let c = space("circle:n=12,L=1");
    let p = build_presentation(&closed(&c, 2, 5)).unwrap();
    let lp = validate_chain(p.entourage(), &circle_loop(12)).unwrap();
    let v = decide_null(&p, &lp, DEFAULT_BUDGET).unwrap();
    let Verdict::Null(seq) = &v.verdict else { panic!("{v:?}") };
    let end = seq.replay(p.entourage()).unwrap();
    assert!(end.is_constant());
    assert_eq!(seq.start, circle_loop(12));
}

#[test]
fn constant_and_inverse_loops() {
    let c = space("circle:n=12,L=1");
    let p = build_presentation(&closed(&c, 1, 6)).unwrap();
    let k = validate_chain(p.entourage(), &[3, 3]).unwrap();
    assert!(loop_word(&p, &k).unwrap().is_empty());
    let v = decide_null(&p, &k, 10).unwrap();
    match v.verdict {
        Verdict::Null(seq) => assert!(seq.moves.is_empty()),
        other => panic!("{other:?}"),
    }
    let lp = validate_chain(p.entourage(), &[0, 2, 4, 6, 8, 10, 0]).unwrap();
    let both = concat(&lp, &reverse(&lp)).unwrap();
    assert!(loop_word(&p, &both).unwrap().is_empty());
    assert!(decide_null(&p, &both, DEFAULT_BUDGET).unwrap().is_null());
    let open = validate_chain(p.entourage(), &[0, 1, 2]).unwrap();
    assert!(loop_word(&p, &open).is_err());
}

#[test]
fn kernel_generators_examples() {
    let c = space("circle:n=12,L=1");
    let e = closed(&c, 1, 6);
    let p = build_presentation(&e).unwrap();
    for g in kernel_generators(&p, &e).unwrap() {
        assert!(decide_null(&p, &g, DEFAULT_BUDGET).unwrap().is_null());
    }
    // a triad of the coarser scale is the whole circle at the finer one
    let ks = kernel_generators(&p, &closed(&c, 2, 5)).unwrap();
    let hits = ks
        .iter()
        .filter(|g| {
            let w = loop_word(&p, g).unwrap();
            p.group().model().residue(&w).unwrap().iter().any(|&x| x != 0)
        })
        .count();
    assert!(hits > 0);
    let kq = kernel_generators(&p, &closed(&c, 1, 4)).unwrap();
    assert!(!kq.is_empty());
    for g in kq {
        assert!(decide_null(&p, &g, DEFAULT_BUDGET).unwrap().is_null());
    }
}

fn random_loop(e: &Entourage, rng: &mut ChaCha8Rng, steps: usize) -> Vec<usize> {
    let n = e.len();
    let start = rng.gen_range(0..n);
    let mut pts = vec![start];
    for _ in 0..steps {
        let u = *pts.last().unwrap();
        let nb: Vec<usize> = e.neighbors(u).collect();
        pts.push(nb[rng.gen_range(0..nb.len())]);
    }
    // close up along a fewest-hop path
    let u = *pts.last().unwrap();
    let mut prev = vec![usize::MAX; n];
    prev[u] = u;
    let mut q = std::collections::VecDeque::from([u]);
    while let Some(x) = q.pop_front() {
        for y in e.neighbors(x) {
            if prev[y] == usize::MAX {
                prev[y] = x;
                q.push_back(y);
            }
        }
    }
    let mut back = vec![];
    let mut x = start;
    while x != u {
        back.push(x);
        x = prev[x];
    }
    back.reverse();
    pts.extend(back);
    pts
}

fn spaces() -> Vec<(FiniteMetricSpace, Vec<(i64, i64)>)> {
    vec![
        (space("circle:n=12,L=1"), vec![(1, 12), (1, 6), (1, 4), (1, 3), (2, 5)]),
        (space("torus:p=4,q=4,Lx=1,Ly=1"), vec![(1, 4), (1, 2)]),
        (space("wedge:L=1;3/2,nodes=8;12"), vec![(1, 8), (1, 4), (3, 8)]),
    ]
}

#[test]
fn verdicts_agree_across_coordinates() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (s, scales) in spaces() {
        for (p, q) in scales {
            let e = closed(&s, p, q);
            let pres = build_presentation(&e).unwrap();
            let base = EntourageGroup::new(&e).unwrap();
            for _ in 0..25 {
                let pts = random_loop(&e, &mut rng, 8);
                let a = pres.group().decide_null(&pts, 20_000).unwrap();
                let b = base.decide_null(&pts, 20_000).unwrap();
                assert!(!(a.is_null() && b.is_non_null()), "{pts:?} at {p}/{q}");
                assert!(!(a.is_non_null() && b.is_null()), "{pts:?} at {p}/{q}");
                if let Verdict::Null(seq) = &a.verdict {
                    assert!(seq.replay(&e).unwrap().is_constant());
                }
            }
        }
    }
}

#[test]
fn words_are_functorial() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (s, scales) in spaces() {
        for (p, q) in scales {
            let e = closed(&s, p, q);
            let pres = build_presentation(&e).unwrap();
            for _ in 0..10 {
                let a = random_loop(&e, &mut rng, 6);
                let mut b = random_loop(&e, &mut rng, 6);
                // rebase b at a's basepoint
                b = [vec![a[0]], b, vec![a[0]]].concat();
                let Ok(bc) = validate_chain(&e, &b) else { continue };
                let ac = validate_chain(&e, &a).unwrap();
                let wa = loop_word(&pres, &ac).unwrap();
                let wb = loop_word(&pres, &bc).unwrap();
                let wab = loop_word(&pres, &concat(&ac, &bc).unwrap()).unwrap();
                assert_eq!(wab, reduce(&[wa.clone(), wb].concat()));
                assert_eq!(loop_word(&pres, &reverse(&ac)).unwrap(), inverse(&wa));
            }
        }
    }
}

#[test]
fn moves_preserve_h1_image() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (s, scales) in spaces() {
        for (p, q) in scales {
            let e = closed(&s, p, q);
            let pres = build_presentation(&e).unwrap();
            let model = pres.group().model();
            let n = e.len();
            for _ in 0..20 {
                let mut pts = random_loop(&e, &mut rng, 6);
                let before = pres.group().word(&pts);
                let m = if rng.gen_bool(0.5) && pts.len() > 2 {
                    Move::Remove { pos: rng.gen_range(1..pts.len() - 1) }
                } else {
                    Move::Insert { pos: rng.gen_range(1..pts.len()), vertex: rng.gen_range(0..n) }
                };
                if apply_move_points(&e, &mut pts, m).is_err() {
                    continue;
                }
                let after = pres.group().word(&pts);
                assert_eq!(model.residue(&before).unwrap(), model.residue(&after).unwrap());
                if pres.relators().iter().all(|r| r.is_empty()) {
                    assert_eq!(before, after);
                }
            }
        }
    }
}

#[test]
fn short_loops_are_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (s, scales) in spaces() {
        for (p, q) in scales {
            let eps = Rational::new(p, q);
            let e = metric_entourage(&s, eps, true).unwrap();
            if e.is_identity() {
                continue;
            }
            let g = EntourageGroup::new(&e).unwrap();
            for _ in 0..30 {
                let pts = random_loop(&e, &mut rng, 2);
                let len: Rational = pts.windows(2).map(|w| s.dist(w[0], w[1])).sum();
                // a sample only resolves the bound up to one base step
                let base = s.base_scale().unwrap();
                if len >= (eps - base) * 3 {
                    continue;
                }
                let v = g.decide_null(&pts, DEFAULT_BUDGET).unwrap();
                assert!(v.is_null(), "{pts:?} at {eps}: {v:?}");
            }
        }
    }
}
