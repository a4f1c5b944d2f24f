//! Seeded randomized checks behind `spectra selftest`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectra_core::chains::{close_homotopy, normalize, validate_chain};
use spectra_core::complex::{build_presentation, Verdict};
use spectra_core::cover::build_cover_ball;
use spectra_core::{metric_entourage, Entourage, FiniteMetricSpace, GeneratorSpec, Rational};

pub struct Check {
    pub name: &'static str,
    pub samples: usize,
    pub failures: usize,
}

const SPACES: [&str; 3] = ["circle:n=12,L=1", "torus:p=4,q=4,Lx=1,Ly=1", "wedge:L=1;3/2,nodes=8;12"];

fn spaces() -> Result<Vec<FiniteMetricSpace>, String> {
    SPACES
        .iter()
        .map(|s| {
            let spec: GeneratorSpec = s.parse().map_err(|e| format!("{s}: {e}"))?;
            FiniteMetricSpace::generate(&spec).map_err(|e| e.to_string())
        })
        .collect()
}

fn random_scale(s: &FiniteMetricSpace, rng: &mut ChaCha8Rng) -> Rational {
    *s.distance_values().choose(rng).expect("nonempty")
}

fn walk(e: &Entourage, rng: &mut ChaCha8Rng, start: usize, steps: usize) -> Vec<usize> {
    let mut pts = vec![start];
    for _ in 0..steps {
        let nb: Vec<usize> = e.neighbors(*pts.last().unwrap()).collect();
        pts.push(*nb.choose(rng).unwrap());
    }
    pts
}

pub fn run(seed: u64, samples: usize) -> Result<Vec<Check>, String> {
    let spaces = spaces()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // normalization length bound
    let mut failures = 0;
    for _ in 0..samples {
        let s = spaces.choose(&mut rng).unwrap();
        let eps = random_scale(s, &mut rng);
        let e = metric_entourage(s, eps, false).map_err(|e| e.to_string())?;
        let start = rng.gen_range(0..s.len());
        let steps = rng.gen_range(1..20);
        let c = validate_chain(&e, &walk(&e, &mut rng, start, steps)).map_err(|e| e.to_string())?;
        let ok = match normalize(&c, eps, None) {
            Ok((n, seq)) => {
                let bound = (c.length() * 4 / eps).floor().to_integer() as usize + 1;
                n.nu() <= bound && seq.replay(&e).is_ok_and(|r| r.points() == n.points())
            }
            Err(_) => false,
        };
        failures += usize::from(!ok);
    }
    out.push(Check { name: "normalize_bound", samples, failures });

    // close homotopies replay
    let mut failures = 0;
    let mut done = 0;
    while done < samples {
        let s = spaces.choose(&mut rng).unwrap();
        let eps = random_scale(s, &mut rng);
        let e = metric_entourage(s, eps, false).map_err(|e| e.to_string())?;
        let f = metric_entourage(s, eps / 2, false).map_err(|e| e.to_string())?;
        let start = rng.gen_range(0..s.len());
        let steps = rng.gen_range(1..10);
        let alpha = walk(&f, &mut rng, start, steps);
        let mut beta = alpha.clone();
        for i in 1..beta.len() - 1 {
            let nb: Vec<usize> = f.neighbors(alpha[i]).collect();
            beta[i] = *nb.choose(&mut rng).unwrap();
        }
        if beta.windows(2).any(|w| !e.contains(w[0], w[1])) {
            continue;
        }
        done += 1;
        let a = validate_chain(&e, &alpha).map_err(|e| e.to_string())?;
        let ok = close_homotopy(&a, &beta, &f)
            .ok()
            .and_then(|seq| seq.replay(&e).ok())
            .is_some_and(|end| end.points() == beta.as_slice());
        failures += usize::from(!ok);
    }
    out.push(Check { name: "close_homotopy", samples, failures });

    // lifted edges are isometric to their projections
    let mut failures = 0;
    let mut done = 0;
    while done < samples {
        let s = spaces.choose(&mut rng).unwrap();
        let eps = random_scale(s, &mut rng);
        let e = metric_entourage(s, eps, false).map_err(|e| e.to_string())?;
        let Ok(ball) = build_cover_ball(&e, eps * 3) else { continue };
        let edges = ball.edges();
        for _ in 0..10.min(samples - done) {
            let Some(&(u, v)) = edges.choose(&mut rng) else { break };
            done += 1;
            let d = s.dist(ball.point(u).vertex, ball.point(v).vertex);
            let ok = ball.lifted_distance(u, v).is_ok_and(|l| !l.exact || l.value == d);
            failures += usize::from(!ok);
        }
    }
    out.push(Check { name: "lifted_isometry", samples, failures });

    // verdicts from two coordinate systems never disagree; Null replays
    let mut failures = 0;
    let mut done = 0;
    while done < samples {
        let s = spaces.choose(&mut rng).unwrap();
        let eps = random_scale(s, &mut rng);
        let e = metric_entourage(s, eps, false).map_err(|e| e.to_string())?;
        let start = rng.gen_range(0..s.len());
        let steps = rng.gen_range(2..8);
        let mut pts = walk(&e, &mut rng, start, steps);
        if !e.contains(*pts.last().unwrap(), start) {
            continue;
        }
        pts.push(start);
        done += 1;
        let pres = build_presentation(&e).map_err(|e| e.to_string())?;
        let base = spectra_core::complex::EntourageGroup::new(&e).map_err(|e| e.to_string())?;
        let a = pres.group().decide_null(&pts, 20_000).map_err(|e| e.to_string())?;
        let b = base.decide_null(&pts, 20_000).map_err(|e| e.to_string())?;
        let mut ok = !(a.is_null() && b.is_non_null()) && !(a.is_non_null() && b.is_null());
        for v in [&a, &b] {
            if let Verdict::Null(seq) = &v.verdict {
                ok &= seq.replay(&e).is_ok_and(|c| c.is_constant());
            }
        }
        failures += usize::from(!ok);
    }
    out.push(Check { name: "verdict_soundness", samples, failures });
    Ok(out)
}
