//! Entourages on a finite space: dense symmetric reflexive relations with
//! metric provenance, unions, intersections, composition powers, the size
//! measure sigma and the discrete chainedness test.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{render, Rational};
use crate::space::{FiniteMetricSpace, SpaceError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntourageError {
    #[error("scale must be positive")]
    NonpositiveEps,
    #[error("entourages are bound to different spaces")]
    MixedSpaces,
    #[error("empty list of entourages")]
    EmptyUnion,
    #[error("pair ({i}, {j}) references a vertex outside 0..{n}")]
    BadPair { i: usize, j: usize, n: usize },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Where an entourage came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Metric { eps: Rational, strict: bool },
    Union(Vec<Provenance>),
    Intersection(Box<Provenance>, Box<Provenance>),
    Compose(Box<Provenance>, usize),
    Custom,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Metric { eps, strict: true } => write!(f, "strict({})", render(eps)),
            Provenance::Metric { eps, strict: false } => write!(f, "closed({})", render(eps)),
            Provenance::Union(parts) => {
                let ps: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "union({})", ps.join(","))
            }
            Provenance::Intersection(a, b) => write!(f, "meet({a},{b})"),
            Provenance::Compose(e, k) => write!(f, "pow({e},{k})"),
            Provenance::Custom => write!(f, "custom"),
        }
    }
}

/// Metric size of an entourage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sigma {
    Finite(Rational),
    Unbounded,
}

impl Sigma {
    pub fn at_least(&self, eps: Rational) -> bool {
        match self {
            Sigma::Finite(s) => *s >= eps,
            Sigma::Unbounded => true,
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Finite(r) => write!(f, "{}", render(r)),
            Sigma::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// Symmetric reflexive relation on the vertices of a space, one bit row per
/// vertex.
#[derive(Debug, Clone)]
pub struct Entourage {
    space: FiniteMetricSpace,
    words: usize,
    bits: Arc<Vec<u64>>,
    provenance: Provenance,
}

impl PartialEq for Entourage {
    /// Relations are compared; provenance is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.bits == other.bits
    }
}

impl Eq for Entourage {}

impl Entourage {
    fn empty(space: &FiniteMetricSpace, provenance: Provenance) -> Self {
        let n = space.len();
        let words = n.div_ceil(64).max(1);
        let mut e = Entourage { space: space.clone(), words, bits: Arc::new(vec![0; n * words]), provenance };
        for i in 0..n {
            e.set(i, i);
        }
        e
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        let words = self.words;
        let bits = Arc::make_mut(&mut self.bits);
        bits[i * words + j / 64] |= 1u64 << (j % 64);
        bits[j * words + i / 64] |= 1u64 << (i % 64);
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Identity relation (the diagonal).
    pub fn identity(space: &FiniteMetricSpace) -> Self {
        Self::empty(space, Provenance::Custom)
    }

    /// All pairs.
    pub fn full(space: &FiniteMetricSpace) -> Self {
        let n = space.len();
        let mut e = Self::empty(space, Provenance::Custom);
        for i in 0..n {
            for j in (i + 1)..n {
                e.set(i, j);
            }
        }
        e
    }

    /// Symmetrizes the given pairs and adds the diagonal.
    pub fn custom(space: &FiniteMetricSpace, pairs: &[(usize, usize)]) -> Result<Self, EntourageError> {
        let n = space.len();
        let mut e = Self::empty(space, Provenance::Custom);
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(EntourageError::BadPair { i, j, n });
            }
            e.set(i, j);
        }
        Ok(e)
    }

    /// Loads `{"pairs": [[i, j], ...]}`.
    pub fn custom_from_json(space: &FiniteMetricSpace, text: &str) -> Result<Self, crate::io::InputError> {
        let file: PairsFile = crate::io::from_json_str(text)?;
        Self::custom(space, &file.pairs).map_err(|e| crate::io::InputError::Domain(e.to_string()))
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// `Some(true)` for a strict metric entourage, `Some(false)` for a
    /// closed one.
    pub fn strictness(&self) -> Option<bool> {
        match self.provenance {
            Provenance::Metric { strict, .. } => Some(strict),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        self.provenance.to_string()
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// B(x, E) in increasing order.
    pub fn ball(&self, x: usize) -> Result<Vec<usize>, EntourageError> {
        self.space.check_vertex(x)?;
        Ok(self.neighbors(x).collect())
    }

    /// Related vertices of `x` in increasing order, `x` included.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(x).iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }

    /// Off-diagonal pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            out.extend(self.neighbors(i).filter(|&j| j > i).map(|j| (i, j)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        let total: usize = self.bits.iter().map(|w| w.count_ones() as usize).sum();
        (total - self.len()) / 2
    }

    pub fn is_subset(&self, other: &Entourage) -> bool {
        self.bits.iter().zip(other.bits.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn is_full(&self) -> bool {
        self.edge_count() == self.len() * (self.len() - 1) / 2
    }

    pub fn is_identity(&self) -> bool {
        self.edge_count() == 0
    }

    fn same_space(&self, other: &Entourage) -> Result<(), EntourageError> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(EntourageError::MixedSpaces)
        }
    }

    /// Pointwise AND.
    pub fn intersection(&self, other: &Entourage) -> Result<Entourage, EntourageError> {
        self.same_space(other)?;
        let bits = Arc::new(self.bits.iter().zip(other.bits.iter()).map(|(a, b)| a & b).collect());
        Ok(Entourage {
            space: self.space.clone(),
            words: self.words,
            bits,
            provenance: Provenance::Intersection(
                Box::new(self.provenance.clone()),
                Box::new(other.provenance.clone()),
            ),
        })
    }

    /// Largest realized distance below which every pair is related, i.e. the
    /// smallest distance of an unrelated pair.
    pub fn sigma(&self) -> Sigma {
        let n = self.len();
        let mut best: Option<Rational> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                if !self.contains(i, j) {
                    let d = self.space.dist(i, j);
                    if best.is_none_or(|b| d < b) {
                        best = Some(d);
                    }
                }
            }
        }
        best.map_or(Sigma::Unbounded, Sigma::Finite)
    }

    /// Checks that every related pair is joined by base-scale steps inside
    /// the intersection of the two balls.
    pub fn is_chained(&self) -> Chainedness {
        let n = self.len();
        let Some(base) = self.space.base_scale() else {
            return Chainedness { chained: true, witness: None };
        };
        let base_adj = base_adjacency(&self.space, base);
        let mut seen = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for (stamp, (x, y)) in self.edges().into_iter().enumerate() {
            if self.space.dist(x, y) == base {
                continue;
            }
            queue.clear();
            queue.push_back(x);
            seen[x] = stamp;
            let mut found = false;
            while let Some(u) = queue.pop_front() {
                for &v in &base_adj[u] {
                    if seen[v] == stamp || !self.contains(x, v) || !self.contains(y, v) {
                        continue;
                    }
                    if v == y {
                        found = true;
                        break;
                    }
                    seen[v] = stamp;
                    queue.push_back(v);
                }
                if found {
                    break;
                }
            }
            if !found {
                return Chainedness { chained: false, witness: Some((x, y)) };
            }
        }
        Chainedness { chained: true, witness: None }
    }
}

/// Outcome of [`Entourage::is_chained`], with a violating pair on failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chainedness {
    pub chained: bool,
    pub witness: Option<(usize, usize)>,
}

/// Neighbour lists of the finest closed metric entourage.
pub fn base_adjacency(space: &FiniteMetricSpace, base: Rational) -> Vec<Vec<usize>> {
    let n = space.len();
    (0..n)
        .map(|i| (0..n).filter(|&j| j != i && space.dist(i, j) <= base).collect())
        .collect()
}

/// `{(i,j): d(i,j) < eps}` when `strict`, else `{(i,j): d(i,j) <= eps}`.
pub fn metric_entourage(
    space: &FiniteMetricSpace,
    eps: Rational,
    strict: bool,
) -> Result<Entourage, EntourageError> {
    if eps <= Rational::zero() {
        return Err(EntourageError::NonpositiveEps);
    }
    let n = space.len();
    let mut e = Entourage::empty(space, Provenance::Metric { eps, strict });
    for i in 0..n {
        for j in (i + 1)..n {
            let d = space.dist(i, j);
            if d < eps || (!strict && d == eps) {
                e.set(i, j);
            }
        }
    }
    Ok(e)
}

/// E_base: the closed metric entourage at the smallest positive distance.
pub fn base_entourage(space: &FiniteMetricSpace) -> Entourage {
    match space.base_scale() {
        Some(b) => metric_entourage(space, b, false).expect("base scale is positive"),
        None => Entourage::identity(space),
    }
}

/// Pairs joined by an `e`-chain of at most `k` steps.
pub fn compose(e: &Entourage, k: usize) -> Entourage {
    let mut result = Entourage::identity(&e.space);
    let mut power = e.clone();
    let mut k_left = k;
    while k_left > 0 {
        if k_left & 1 == 1 {
            result = product(&result, &power);
        }
        k_left >>= 1;
        if k_left > 0 {
            power = product(&power, &power);
        }
    }
    result.provenance = Provenance::Compose(Box::new(e.provenance.clone()), k);
    result
}

fn product(a: &Entourage, b: &Entourage) -> Entourage {
    let n = a.len();
    let mut out = Entourage::empty(&a.space, Provenance::Custom);
    for x in 0..n {
        let mut row = vec![0u64; a.words];
        for y in a.neighbors(x) {
            for (r, w) in row.iter_mut().zip(b.row(y)) {
                *r |= w;
            }
        }
        Arc::make_mut(&mut out.bits)[x * a.words..(x + 1) * a.words].copy_from_slice(&row);
    }
    out
}

/// Pointwise OR of a nonempty list.
pub fn union(es: &[Entourage]) -> Result<Entourage, EntourageError> {
    let first = es.first().ok_or(EntourageError::EmptyUnion)?;
    let mut out = first.clone();
    for e in &es[1..] {
        first.same_space(e)?;
        for (a, b) in Arc::make_mut(&mut out.bits).iter_mut().zip(e.bits.iter()) {
            *a |= b;
        }
    }
    out.provenance = Provenance::Union(es.iter().map(|e| e.provenance.clone()).collect());
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct PairsFile {
    pairs: Vec<(usize, usize)>,
}

/// Declarative description of an entourage, as found in family files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntourageSpec {
    Metric {
        #[serde(with = "crate::rational::serde_rational")]
        eps: Rational,
        #[serde(default)]
        strict: bool,
    },
    Pairs(Vec<(usize, usize)>),
    Union(Vec<EntourageSpec>),
    Compose { of: Box<EntourageSpec>, k: usize },
    Full,
    Identity,
}

impl EntourageSpec {
    pub fn build(&self, space: &FiniteMetricSpace) -> Result<Entourage, EntourageError> {
        match self {
            EntourageSpec::Metric { eps, strict } => metric_entourage(space, *eps, *strict),
            EntourageSpec::Pairs(p) => Entourage::custom(space, p),
            EntourageSpec::Union(parts) => {
                let es = parts.iter().map(|p| p.build(space)).collect::<Result<Vec<_>, _>>()?;
                union(&es)
            }
            EntourageSpec::Compose { of, k } => Ok(compose(&of.build(space)?, *k)),
            EntourageSpec::Full => Ok(Entourage::full(space)),
            EntourageSpec::Identity => Ok(Entourage::identity(space)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::GeneratorSpec;

    fn circle(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::generate(&GeneratorSpec::Circle { n, length: Rational::from_integer(1) }).unwrap()
    }

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn metric_entourages_on_circle() {
        let c = circle(12);
        let strict = metric_entourage(&c, r(1, 12), true).unwrap();
        assert!(strict.is_identity());
        let closed = metric_entourage(&c, r(1, 12), false).unwrap();
        assert_eq!(closed.ball(0).unwrap(), vec![0, 1, 11]);
        let e = metric_entourage(&c, r(3, 10), true).unwrap();
        assert!((0..12).all(|x| e.ball(x).unwrap().len() == 7));
        assert_eq!(e.ball(0).unwrap(), vec![0, 1, 2, 3, 9, 10, 11]);
        assert_eq!(metric_entourage(&c, Rational::zero(), true), Err(EntourageError::NonpositiveEps));
        assert!(matches!(e.ball(12), Err(EntourageError::Space(SpaceError::BadVertex { .. }))));
    }

    #[test]
    fn composition() {
        let c = circle(12);
        let id = Entourage::identity(&c);
        assert_eq!(compose(&id, 5), id);
        let e = metric_entourage(&c, r(1, 12), false).unwrap();
        assert!(compose(&e, 6).is_full());
        assert!(!compose(&e, 5).is_full());
        assert_eq!(compose(&e, 1), e);
        assert_eq!(compose(&e, 2), metric_entourage(&c, r(1, 6), false).unwrap());
    }

    #[test]
    fn unions() {
        let c = circle(12);
        let a = metric_entourage(&c, r(1, 12), false).unwrap();
        let b = metric_entourage(&c, r(1, 6), false).unwrap();
        assert_eq!(union(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(union(&[a.clone(), b.clone()]).unwrap(), b);
        let p = Entourage::custom(&c, &[(0, 3)]).unwrap();
        let q = Entourage::custom(&c, &[(5, 2)]).unwrap();
        let u = union(&[p.clone(), q.clone()]).unwrap();
        for x in 0..12 {
            let mut expect: Vec<usize> = p.ball(x).unwrap();
            expect.extend(q.ball(x).unwrap());
            expect.sort();
            expect.dedup();
            assert_eq!(u.ball(x).unwrap(), expect);
        }
        let other = circle(13);
        assert_eq!(union(&[a, Entourage::identity(&other)]), Err(EntourageError::MixedSpaces));
        assert_eq!(union(&[]), Err(EntourageError::EmptyUnion));
    }

    #[test]
    fn sigma_values() {
        let c = circle(12);
        assert_eq!(Entourage::full(&c).sigma(), Sigma::Unbounded);
        assert_eq!(metric_entourage(&c, r(3, 10), true).unwrap().sigma(), Sigma::Finite(r(1, 3)));
        assert_eq!(Entourage::identity(&c).sigma(), Sigma::Finite(r(1, 12)));
        assert_eq!(metric_entourage(&c, r(1, 3), false).unwrap().sigma(), Sigma::Finite(r(5, 12)));
    }

    #[test]
    fn chainedness() {
        let c = circle(12);
        for &d in c.distance_values() {
            for strict in [true, false] {
                assert!(metric_entourage(&c, d, strict).unwrap().is_chained().chained);
            }
        }
        let bad = Entourage::custom(&c, &[(0, 6)]).unwrap().is_chained();
        assert_eq!(bad, Chainedness { chained: false, witness: Some((0, 6)) });
        assert!(Entourage::identity(&c).is_chained().chained);
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"[{"metric":{"eps":"1/3","strict":true}},{"pairs":[[0,1]]},{"union":[{"metric":{"eps":"1/12"}},"full"]}]"#;
        let specs: Vec<EntourageSpec> = serde_json::from_str(text).unwrap();
        let c = circle(12);
        let built: Vec<Entourage> = specs.iter().map(|s| s.build(&c).unwrap()).collect();
        assert_eq!(built[0], metric_entourage(&c, r(1, 3), true).unwrap());
        assert!(built[2].is_full());
    }
}
