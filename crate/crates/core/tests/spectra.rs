use std::time::Instant;

use spectra_core::spectra::{
    covering_from_hcs, entourage_spectrum, homotopy_critical_spectrum, minimum_length_spectrum, nc_profile,
    metric_family, t2_bound, verify_certificate, ScanOptions,
};
use spectra_core::{base_entourage, FiniteMetricSpace, GeneratorSpec, Rational};

fn space(spec: &str) -> FiniteMetricSpace {
    FiniteMetricSpace::generate(&spec.parse::<GeneratorSpec>().unwrap()).unwrap()
}

fn r(p: i64, q: i64) -> Rational {
    Rational::new(p, q)
}

#[test]
fn circle_twelve_hcs() {
    let c = space("circle:n=12,L=1");
    let h = homotopy_critical_spectrum(&c, &ScanOptions::default()).unwrap();
    assert_eq!(h.pairs(), vec![(r(1, 3), 1)]);
    for v in &h.values {
        for cert in &v.certificates {
            verify_certificate(&c, cert).unwrap();
        }
    }
    assert_eq!(covering_from_hcs(&h).pairs(), vec![(r(1, 2), 1)]);
}

#[test]
fn circle_hundred_twenty() {
    let t = Instant::now();
    let c = space("circle:n=120,L=1");
    let h = homotopy_critical_spectrum(&c, &ScanOptions::default()).unwrap();
    eprintln!("circle(120) hcs {:?}", t.elapsed());
    assert_eq!(h.pairs(), vec![(r(1, 3), 1)]);
}

#[test]
fn torus_hcs() {
    let t = Instant::now();
    let s = space("torus:p=12,q=12,Lx=1,Ly=1");
    let h = homotopy_critical_spectrum(&s, &ScanOptions::default()).unwrap();
    eprintln!("torus hcs {:?} {:?}", t.elapsed(), h.artifacts.iter().map(|a| (a.value, a.multiplicity)).collect::<Vec<_>>());
    assert_eq!(h.pairs(), vec![(r(1, 3), 2)]);
    for v in &h.values {
        for cert in &v.certificates {
            verify_certificate(&s, cert).unwrap();
        }
    }
}

#[test]
fn wedge_spectra() {
    let t = Instant::now();
    let w = space("wedge:L=1;3/2,nodes=12;18");
    let h = homotopy_critical_spectrum(&w, &ScanOptions::default()).unwrap();
    assert_eq!(h.value_set(), vec![r(1, 3), r(1, 2)]);
    let es = entourage_spectrum(&w, &ScanOptions::default()).unwrap();
    eprintln!("wedge es {:?} {:?}", t.elapsed(), es.pairs());
    for v in &es.values {
        for cert in &v.certificates {
            verify_certificate(&w, cert).unwrap();
        }
    }
    let mls = minimum_length_spectrum(&base_entourage(&w), r(8, 5), 1000).unwrap();
    assert_eq!(mls.value_set(), vec![r(1, 1), r(3, 2)]);
}

#[test]
fn circle_mls_and_ecs() {
    let c = space("circle:n=60,L=1");
    let mls = minimum_length_spectrum(&base_entourage(&c), r(5, 2), 1000).unwrap();
    assert_eq!(mls.value_set(), vec![r(1, 1), r(2, 1)]);
    let t = Instant::now();
    let fam = metric_family(&c).unwrap();
    let ecs = nc_profile(&fam, "metric").unwrap();
    eprintln!("circle ecs {:?} {:?}", t.elapsed(), ecs.pairs());
    assert_eq!(ecs.pairs(), vec![(r(1, 3), 1)]);
    let es = entourage_spectrum(&c, &ScanOptions::default()).unwrap();
    assert_eq!(es.value_set(), vec![r(1, 1)]);
}

#[test]
fn t2_on_circle() {
    let c = space("circle:n=12,L=1");
    let b = t2_bound(&c, r(1, 1)).unwrap();
    assert_eq!(b.log2, num_bigint::BigUint::from(3u32).pow(80));
}
