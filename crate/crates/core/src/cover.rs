//! Radius-bounded balls in the cover of an entourage, chain lifting, the
//! lifted metric, and equivalence of covers.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::chains::{refine_gap, validate_chain, ChainError};
use crate::complex::{
    for_each_triad, BaseFrame, ClassKey, ComplexError, EntourageGroup, Triviality, Verdict, DEFAULT_BUDGET,
};
use crate::entourage::Entourage;
use crate::rational::{serde_rational, Rational};

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("could not decide whether loop {0:?} is null")]
    UndecidedMerge(Vec<usize>),
    #[error("entourage is not chained at pair ({0}, {1})")]
    NotChained(usize, usize),
    #[error("lift leaves the built ball at step {0}")]
    RadiusExceeded(usize),
    #[error("start point lies over vertex {lifted}, chain starts at {chain}")]
    BasepointMismatch { lifted: usize, chain: usize },
    #[error("no lifted point {0}")]
    BadPoint(usize),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// One lifted point: a base vertex with a homotopy class of chains from the
/// basepoint.
#[derive(Debug, Clone, Serialize)]
pub struct LiftedPoint {
    pub vertex: usize,
    /// Index of the point among the lifts of `vertex`, in discovery order.
    pub sheet: usize,
    /// Lifted distance from the basepoint lift.
    #[serde(with = "serde_rational")]
    pub distance: Rational,
    /// Fewest-hop layer from the basepoint lift.
    pub layer: usize,
    /// A chain from the basepoint representing the class.
    pub chain: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CoverBall {
    group: Arc<EntourageGroup>,
    radius: Rational,
    points: Vec<LiftedPoint>,
    adj: Vec<Vec<usize>>,
    fibers: Vec<Vec<usize>>,
}

/// A lifted distance, with a flag telling whether the ball was large enough
/// to make it exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LiftedDistance {
    #[serde(with = "serde_rational")]
    pub value: Rational,
    pub exact: bool,
}

pub fn build_cover_ball(e: &Entourage, radius: Rational) -> Result<CoverBall, CoverError> {
    if let Some((x, y)) = e.is_chained().witness {
        return Err(CoverError::NotChained(x, y));
    }
    let group = EntourageGroup::new(e)?;
    build_with_group(Arc::new(group), radius)
}

/// Dijkstra over (vertex, class) states. Classes are model keys when the
/// group is free or abelian and nullity-tested representatives otherwise.
pub fn build_with_group(group: Arc<EntourageGroup>, radius: Rational) -> Result<CoverBall, CoverError> {
    let e = group.entourage().clone();
    let s = e.space().clone();
    let n = e.len();
    let keyed = group.model().identity_key().is_some();
    let mut points: Vec<LiftedPoint> = Vec::new();
    let mut fibers: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut keys: HashMap<(usize, ClassKey), usize> = HashMap::new();
    let mut point_key: Vec<Option<ClassKey>> = Vec::new();
    // (distance, layer, index into pending)
    let mut heap = BinaryHeap::new();
    let mut pending: Vec<(Vec<usize>, Option<ClassKey>)> = vec![(vec![0], group.model().identity_key())];
    heap.push(Reverse((Rational::from_integer(0), 0usize, 0usize)));
    while let Some(Reverse((d, layer, id))) = heap.pop() {
        let (chain, key) = std::mem::take(&mut pending[id]);
        let v = *chain.last().unwrap();
        let known = match &key {
            Some(k) => keys.contains_key(&(v, k.clone())),
            None => find_sheet(&group, &points, &fibers[v], &chain)?.is_some(),
        };
        if known {
            continue;
        }
        let idx = points.len();
        if let Some(k) = &key {
            keys.insert((v, k.clone()), idx);
        }
        fibers[v].push(idx);
        points.push(LiftedPoint { vertex: v, sheet: fibers[v].len() - 1, distance: d, layer, chain: chain.clone() });
        point_key.push(key.clone());
        for w in e.neighbors(v).filter(|&w| w != v) {
            let nd = d + s.dist(v, w);
            if nd > radius {
                continue;
            }
            let nkey = match &key {
                Some(k) => group.model().extend_key(k, &group.coords().edge_word(v, w)),
                None => None,
            };
            match &nkey {
                Some(k) if keys.contains_key(&(w, k.clone())) => continue,
                None if keyed => return Err(ComplexError::Overflow.into()),
                _ => {}
            }
            let mut nc = chain.clone();
            nc.push(w);
            heap.push(Reverse((nd, layer + 1, pending.len())));
            pending.push((nc, nkey));
        }
    }
    // lifted edges between built points
    let mut adj = vec![Vec::new(); points.len()];
    for i in 0..points.len() {
        let v = points[i].vertex;
        for w in e.neighbors(v).filter(|&w| w != v) {
            let j = if keyed {
                let k = point_key[i].as_ref().unwrap();
                let nk = group.model().extend_key(k, &group.coords().edge_word(v, w)).ok_or(ComplexError::Overflow)?;
                keys.get(&(w, nk)).copied()
            } else {
                let mut nc = points[i].chain.clone();
                nc.push(w);
                find_sheet(&group, &points, &fibers[w], &nc)?
            };
            if let Some(j) = j {
                adj[i].push(j);
            }
        }
    }
    Ok(CoverBall { group, radius, points, adj, fibers })
}

/// The existing lift over the end of `chain` that `chain` reaches, if any.
fn find_sheet(
    group: &EntourageGroup,
    points: &[LiftedPoint],
    fiber: &[usize],
    chain: &[usize],
) -> Result<Option<usize>, CoverError> {
    for &p in fiber {
        let mut lp = chain.to_vec();
        lp.extend(points[p].chain.iter().rev().skip(1));
        let v = group.decide_null(&lp, DEFAULT_BUDGET)?;
        match v.verdict {
            Verdict::Null(_) => return Ok(Some(p)),
            Verdict::NonNull(_) => {}
            Verdict::Unknown { .. } => return Err(CoverError::UndecidedMerge(lp)),
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverExport {
    #[serde(with = "serde_rational")]
    pub radius: Rational,
    pub entourage: String,
    pub nodes: Vec<LiftedPoint>,
    pub edges: Vec<(usize, usize)>,
}

impl CoverBall {
    pub fn group(&self) -> &EntourageGroup {
        &self.group
    }

    pub fn entourage(&self) -> &Entourage {
        self.group.entourage()
    }

    pub fn radius(&self) -> Rational {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LiftedPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &LiftedPoint {
        &self.points[i]
    }

    /// The lift of the trivial chain.
    pub fn basepoint(&self) -> usize {
        0
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// Lifts over `v`.
    pub fn fiber(&self, v: usize) -> &[usize] {
        &self.fibers[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, nb) in self.adj.iter().enumerate() {
            out.extend(nb.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    pub fn export(&self) -> CoverExport {
        CoverExport {
            radius: self.radius,
            entourage: self.entourage().label(),
            nodes: self.points.clone(),
            edges: self.edges(),
        }
    }

    /// The unique lift of `chain` starting at lifted point `start`.
    pub fn lift_chain(&self, chain: &[usize], start: usize) -> Result<Vec<usize>, CoverError> {
        let p = self.points.get(start).ok_or(CoverError::BadPoint(start))?;
        validate_chain(self.entourage(), chain)?;
        if p.vertex != chain[0] {
            return Err(CoverError::BasepointMismatch { lifted: p.vertex, chain: chain[0] });
        }
        let mut out = vec![start];
        for (k, &w) in chain.iter().enumerate().skip(1) {
            let cur = *out.last().unwrap();
            if self.points[cur].vertex == w {
                out.push(cur);
                continue;
            }
            let next = self.adj[cur]
                .iter()
                .copied()
                .find(|&j| self.points[j].vertex == w)
                .ok_or(CoverError::RadiusExceeded(k))?;
            out.push(next);
        }
        Ok(out)
    }

    /// Shortest-path distance between lifted points in the built ball.
    pub fn lifted_distance(&self, u: usize, v: usize) -> Result<LiftedDistance, CoverError> {
        let n = self.points.len();
        if u >= n {
            return Err(CoverError::BadPoint(u));
        }
        if v >= n {
            return Err(CoverError::BadPoint(v));
        }
        let s = self.entourage().space();
        let mut dist: Vec<Option<Rational>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[u] = Some(Rational::from_integer(0));
        heap.push(Reverse((Rational::from_integer(0), u)));
        while let Some(Reverse((d, i))) = heap.pop() {
            if dist[i].is_some_and(|x| x < d) {
                continue;
            }
            if i == v {
                break;
            }
            for &j in &self.adj[i] {
                let nd = d + s.dist(self.points[i].vertex, self.points[j].vertex);
                if dist[j].is_none_or(|x| nd < x) {
                    dist[j] = Some(nd);
                    heap.push(Reverse((nd, j)));
                }
            }
        }
        let value = dist[v].unwrap_or(self.radius * 2);
        // any shorter path from the nearer point stays inside the ball
        let near = self.points[u].distance.min(self.points[v].distance);
        Ok(LiftedDistance { value, exact: dist[v].is_some() && near + value <= self.radius })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "result")]
pub enum CoverEquivalence {
    Equivalent,
    /// A loop of the common refinement null at one scale but not the other.
    Inequivalent { witness: Vec<usize>, null_at: String, essential_at: String },
    Unknown { undecided: Vec<usize> },
}

/// Compares the covers of `e` and `f` through their intersection.
pub fn covers_equivalent(e: &Entourage, f: &Entourage) -> Result<CoverEquivalence, CoverError> {
    for x in [e, f] {
        if let Some((a, b)) = x.is_chained().witness {
            return Err(CoverError::NotChained(a, b));
        }
    }
    let d = e.intersection(f).map_err(ComplexError::from)?;
    let frame = BaseFrame::new(e.space());
    let ge = EntourageGroup::with_frame(e, frame.as_ref())?;
    let gf = EntourageGroup::with_frame(f, frame.as_ref())?;
    if ge.is_trivial() && gf.is_trivial() {
        return Ok(CoverEquivalence::Equivalent);
    }
    // both ways: refinements of the triads of one scale must die at the other
    for (src, dst) in [(&ge, &gf), (&gf, &ge)] {
        if let Some(out) = triads_die(src.entourage(), &d, dst)? {
            return Ok(out);
        }
    }
    Ok(CoverEquivalence::Equivalent)
}

fn triads_die(src: &Entourage, d: &Entourage, dst: &EntourageGroup) -> Result<Option<CoverEquivalence>, CoverError> {
    let mut seen = HashSet::new();
    let mut loops = Vec::new();
    let mut gap = None;
    for_each_triad(src, |a, b, c| {
        if gap.is_some() || (d.contains(a, b) && d.contains(b, c) && d.contains(a, c)) {
            return;
        }
        let mut pts = vec![a];
        for (x, y) in [(a, b), (b, c), (c, a)] {
            match refine_gap(src, d, x, y) {
                Some(inner) => pts.extend(inner),
                None => {
                    gap = Some((x, y));
                    return;
                }
            }
            pts.push(y);
        }
        if seen.insert(dst.word(&pts)) {
            loops.push(pts);
        }
    });
    if let Some((x, y)) = gap {
        return Err(CoverError::NotChained(x, y));
    }
    for lp in loops {
        match dst.decide(&lp) {
            Triviality::Trivial => continue,
            Triviality::NonTrivial(_) => {
                return Ok(Some(CoverEquivalence::Inequivalent {
                    witness: lp,
                    null_at: src.label(),
                    essential_at: dst.entourage().label(),
                }))
            }
            Triviality::Undetermined => {}
        }
        match dst.decide_null(&lp, DEFAULT_BUDGET)?.verdict {
            Verdict::Null(_) => {}
            Verdict::NonNull(_) => {
                return Ok(Some(CoverEquivalence::Inequivalent {
                    witness: lp,
                    null_at: src.label(),
                    essential_at: dst.entourage().label(),
                }))
            }
            Verdict::Unknown { .. } => return Ok(Some(CoverEquivalence::Unknown { undecided: lp })),
        }
    }
    Ok(None)
}
