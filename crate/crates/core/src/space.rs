//! Finite metric spaces with exact rational distances, the test geometries
//! (circle, flat torus grid, wedge of circles) and covering numbers.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{parse_rational, render, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("empty space")]
    Empty,
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("negative entry at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize },
    #[error("asymmetric matrix: d({i},{j}) = {a} but d({j},{i}) = {b}")]
    AsymmetricMatrix { i: usize, j: usize, a: String, b: String },
    #[error("nonzero diagonal entry at ({i}, {i})")]
    NonzeroDiagonal { i: usize },
    #[error("zero distance between distinct points {i} and {j}")]
    ZeroDistance { i: usize, j: usize },
    #[error("triangle inequality violated: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("graph is disconnected: vertex {vertex} unreachable from vertex 0")]
    DisconnectedGraph { vertex: usize },
    #[error("nonpositive weight on edge ({i}, {j})")]
    NonpositiveWeight { i: usize, j: usize },
    #[error("edge ({i}, {j}) references a vertex outside 0..{n}")]
    BadEdge { i: usize, j: usize, n: usize },
    #[error("vertex {vertex} out of range 0..{n}")]
    BadVertex { vertex: usize, n: usize },
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error("scale must be positive")]
    NonpositiveEps,
}

/// A finite metric space: `n` points and an exact symmetric distance table.
///
/// Immutable after construction; all invariants (zero diagonal, symmetry,
/// positivity off the diagonal, triangle inequality) are checked once.
///
/// Cloning is cheap: the table is shared.
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    inner: Arc<SpaceData>,
}

#[derive(Debug, PartialEq, Eq)]
struct SpaceData {
    n: usize,
    dist: Vec<Rational>,
    labels: Option<Vec<String>>,
    base_scale: Option<Rational>,
    values: Vec<Rational>,
}

impl PartialEq for FiniteMetricSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}

impl Eq for FiniteMetricSpace {}

impl FiniteMetricSpace {
    /// Validates a square table of distances.
    pub fn from_distance_matrix(matrix: Vec<Vec<Rational>>) -> Result<Self, SpaceError> {
        let n = matrix.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(SpaceError::NotSquare { row, len: r.len(), expected: n });
            }
        }
        for i in 0..n {
            for j in 0..n {
                if matrix[i][j] < Rational::zero() {
                    return Err(SpaceError::NegativeEntry { i, j });
                }
            }
            if !matrix[i][i].is_zero() {
                return Err(SpaceError::NonzeroDiagonal { i });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if matrix[i][j] != matrix[j][i] {
                    return Err(SpaceError::AsymmetricMatrix {
                        i,
                        j,
                        a: render(&matrix[i][j]),
                        b: render(&matrix[j][i]),
                    });
                }
                if matrix[i][j].is_zero() {
                    return Err(SpaceError::ZeroDistance { i, j });
                }
            }
        }
        let dist: Vec<Rational> = matrix.into_iter().flatten().collect();
        check_triangle(n, &dist)?;
        Ok(Self::assemble(n, dist))
    }

    /// Shortest-path metric of a connected graph with positive weights.
    pub fn from_weighted_graph(
        n: usize,
        edges: &[(usize, usize, Rational)],
    ) -> Result<Self, SpaceError> {
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        let mut adj: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(SpaceError::BadEdge { i, j, n });
            }
            if w <= Rational::zero() {
                return Err(SpaceError::NonpositiveWeight { i, j });
            }
            if i != j {
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
        let mut dist = vec![Rational::zero(); n * n];
        for s in 0..n {
            let row = dijkstra(&adj, s);
            for (t, d) in row.into_iter().enumerate() {
                match d {
                    Some(d) => dist[s * n + t] = d,
                    None => return Err(SpaceError::DisconnectedGraph { vertex: t }),
                }
            }
        }
        check_triangle(n, &dist)?;
        Ok(Self::assemble(n, dist))
    }

    /// Builds one of the built-in test geometries.
    pub fn generate(spec: &GeneratorSpec) -> Result<Self, SpaceError> {
        match spec {
            GeneratorSpec::Circle { n, length } => circle(*n, *length),
            GeneratorSpec::TorusGrid { p, q, lx, ly } => torus_grid(*p, *q, *lx, *ly),
            GeneratorSpec::Wedge { lengths, nodes } => wedge(lengths, nodes),
        }
    }

    fn assemble(n: usize, dist: Vec<Rational>) -> Self {
        let mut values: Vec<Rational> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                values.push(dist[i * n + j]);
            }
        }
        values.sort();
        values.dedup();
        let base_scale = values.first().copied();
        FiniteMetricSpace {
            inner: Arc::new(SpaceData { n, dist, labels: None, base_scale, values }),
        }
    }

    pub fn with_labels(self, labels: Vec<String>) -> Result<Self, SpaceError> {
        let n = self.len();
        if labels.len() != n {
            return Err(SpaceError::BadParams(format!(
                "{} labels for {} points",
                labels.len(),
                n
            )));
        }
        let d = &self.inner;
        Ok(FiniteMetricSpace {
            inner: Arc::new(SpaceData {
                n,
                dist: d.dist.clone(),
                labels: Some(labels),
                base_scale: d.base_scale,
                values: d.values.clone(),
            }),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        self.inner.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> Rational {
        self.inner.dist[i * self.inner.n + j]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.inner.labels.as_deref()
    }

    /// Smallest positive distance; `None` for a one-point space.
    pub fn base_scale(&self) -> Option<Rational> {
        self.inner.base_scale
    }

    /// Sorted distinct positive distances.
    pub fn distance_values(&self) -> &[Rational] {
        &self.inner.values
    }

    pub fn diameter(&self) -> Rational {
        self.inner.values.last().copied().unwrap_or_else(Rational::zero)
    }

    pub fn check_vertex(&self, v: usize) -> Result<(), SpaceError> {
        if v < self.len() {
            Ok(())
        } else {
            Err(SpaceError::BadVertex { vertex: v, n: self.len() })
        }
    }

    /// Rows of the distance table, for serialization.
    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.inner.dist.chunks(self.inner.n).map(|r| r.to_vec()).collect()
    }
}

fn check_triangle(n: usize, dist: &[Rational]) -> Result<(), SpaceError> {
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let dij = dist[i * n + j];
            for k in (i + 1)..n {
                if k == j {
                    continue;
                }
                if dist[i * n + k] > dij + dist[j * n + k] {
                    return Err(SpaceError::TriangleViolation { i, j, k });
                }
            }
        }
    }
    Ok(())
}

fn dijkstra(adj: &[Vec<(usize, Rational)>], s: usize) -> Vec<Option<Rational>> {
    let mut best: Vec<Option<Rational>> = vec![None; adj.len()];
    let mut heap = BinaryHeap::new();
    best[s] = Some(Rational::zero());
    heap.push(Reverse((Rational::zero(), s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if best[u].is_some_and(|b| d > b) {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if best[v].is_none_or(|b| nd < b) {
                best[v] = Some(nd);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    best
}

/// Parameters for the built-in geometries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// `n` equally spaced points on a circle of circumference `length`.
    Circle {
        n: usize,
        #[serde(rename = "L", with = "crate::rational::serde_rational")]
        length: Rational,
    },
    /// `p × q` grid on the flat torus with side lengths `lx`, `ly`.
    TorusGrid {
        p: usize,
        q: usize,
        #[serde(rename = "Lx", with = "crate::rational::serde_rational")]
        lx: Rational,
        #[serde(rename = "Ly", with = "crate::rational::serde_rational")]
        ly: Rational,
    },
    /// Cycles of the given lengths glued at vertex 0; `nodes[k]` counts the
    /// shared vertex.
    #[serde(rename = "wedge_of_circles", alias = "wedge")]
    Wedge {
        #[serde(rename = "L", with = "rational_list")]
        lengths: Vec<Rational>,
        nodes: Vec<usize>,
    },
}

mod rational_list {
    use crate::rational::{parse_rational, render, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(render))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::Circle { n, length } => write!(f, "circle:n={n},L={length}"),
            GeneratorSpec::TorusGrid { p, q, lx, ly } => {
                write!(f, "torus:p={p},q={q},Lx={lx},Ly={ly}")
            }
            GeneratorSpec::Wedge { lengths, nodes } => {
                let ls: Vec<String> = lengths.iter().map(render).collect();
                let ns: Vec<String> = nodes.iter().map(|k| k.to_string()).collect();
                write!(f, "wedge:L={},nodes={}", ls.join(";"), ns.join(";"))
            }
        }
    }
}

/// Parses the compact command-line form, e.g. `circle:n=12,L=1`,
/// `torus:p=12,q=12,Lx=1,Ly=1` or `wedge:L=1;3/2,nodes=12;18`.
impl FromStr for GeneratorSpec {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| SpaceError::BadParams(m);
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            params
                .get(k)
                .cloned()
                .ok_or_else(|| bad(format!("missing parameter `{k}`")))
        };
        let int = |k: &str| -> Result<usize, SpaceError> {
            get(k)?.parse().map_err(|_| bad(format!("`{k}` is not an integer")))
        };
        let rat = |k: &str| -> Result<Rational, SpaceError> {
            parse_rational(&get(k)?).map_err(|e| bad(format!("`{k}`: {e}")))
        };
        match kind.trim() {
            "circle" => Ok(GeneratorSpec::Circle { n: int("n")?, length: rat("L")? }),
            "torus" | "torus_grid" => Ok(GeneratorSpec::TorusGrid {
                p: int("p")?,
                q: int("q")?,
                lx: rat("Lx")?,
                ly: rat("Ly")?,
            }),
            "wedge" | "wedge_of_circles" => {
                let lengths = get("L")?
                    .split(';')
                    .map(|t| parse_rational(t).map_err(|e| bad(format!("`L`: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                let nodes = get("nodes")?
                    .split(';')
                    .map(|t| t.trim().parse().map_err(|_| bad(format!("bad node count `{t}`"))))
                    .collect::<Result<Vec<usize>, _>>()?;
                Ok(GeneratorSpec::Wedge { lengths, nodes })
            }
            other => Err(bad(format!("unknown generator kind `{other}`"))),
        }
    }
}

fn cyclic_steps(a: usize, b: usize, n: usize) -> usize {
    let k = a.abs_diff(b);
    k.min(n - k)
}

fn circle(n: usize, length: Rational) -> Result<FiniteMetricSpace, SpaceError> {
    if n < 3 {
        return Err(SpaceError::BadParams("circle needs n >= 3".into()));
    }
    if length <= Rational::zero() {
        return Err(SpaceError::BadParams("circle needs L > 0".into()));
    }
    let step = length / Rational::from_integer(n as i64);
    let mut dist = vec![Rational::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = step * Rational::from_integer(cyclic_steps(i, j, n) as i64);
        }
    }
    Ok(FiniteMetricSpace::assemble(n, dist))
}

fn torus_grid(
    p: usize,
    q: usize,
    lx: Rational,
    ly: Rational,
) -> Result<FiniteMetricSpace, SpaceError> {
    if p < 3 || q < 3 {
        return Err(SpaceError::BadParams("torus grid needs p, q >= 3".into()));
    }
    if lx <= Rational::zero() || ly <= Rational::zero() {
        return Err(SpaceError::BadParams("torus grid needs Lx, Ly > 0".into()));
    }
    let sx = lx / Rational::from_integer(p as i64);
    let sy = ly / Rational::from_integer(q as i64);
    let n = p * q;
    let mut dist = vec![Rational::zero(); n * n];
    for a in 0..n {
        let (ax, ay) = (a % p, a / p);
        for b in 0..n {
            let (bx, by) = (b % p, b / p);
            dist[a * n + b] = sx * Rational::from_integer(cyclic_steps(ax, bx, p) as i64)
                + sy * Rational::from_integer(cyclic_steps(ay, by, q) as i64);
        }
    }
    Ok(FiniteMetricSpace::assemble(n, dist))
}

/// Vertex layout of a wedge: vertex 0 is shared; cycle `k` contributes
/// `nodes[k] - 1` further vertices in order around the cycle.
pub fn wedge_edges(
    lengths: &[Rational],
    nodes: &[usize],
) -> Result<(usize, Vec<(usize, usize, Rational)>), SpaceError> {
    if lengths.is_empty() || lengths.len() != nodes.len() {
        return Err(SpaceError::BadParams(
            "wedge needs matching nonempty L and nodes lists".into(),
        ));
    }
    let mut edges = Vec::new();
    let mut next = 1usize;
    for (&len, &m) in lengths.iter().zip(nodes) {
        if m < 3 {
            return Err(SpaceError::BadParams("each wedge cycle needs >= 3 nodes".into()));
        }
        if len <= Rational::zero() {
            return Err(SpaceError::BadParams("wedge cycle lengths must be positive".into()));
        }
        let step = len / Rational::from_integer(m as i64);
        let cycle: Vec<usize> = std::iter::once(0).chain(next..next + m - 1).collect();
        for w in 0..m {
            edges.push((cycle[w], cycle[(w + 1) % m], step));
        }
        next += m - 1;
    }
    Ok((next, edges))
}

fn wedge(lengths: &[Rational], nodes: &[usize]) -> Result<FiniteMetricSpace, SpaceError> {
    let (n, _) = wedge_edges(lengths, nodes)?;
    // closed form: within a cycle the arc metric, across cycles via vertex 0
    let mut owner = vec![(usize::MAX, 0usize); n];
    let mut next = 1usize;
    for (k, &m) in nodes.iter().enumerate() {
        for pos in 1..m {
            owner[next + pos - 1] = (k, pos);
        }
        next += m - 1;
    }
    let arc = |k: usize, a: usize, b: usize| {
        lengths[k] / Rational::from_integer(nodes[k] as i64)
            * Rational::from_integer(cyclic_steps(a, b, nodes[k]) as i64)
    };
    let to_hub = |v: usize| {
        if v == 0 {
            Rational::zero()
        } else {
            let (k, pos) = owner[v];
            arc(k, 0, pos)
        }
    };
    let mut dist = vec![Rational::zero(); n * n];
    for a in 0..n {
        for b in 0..n {
            dist[a * n + b] = if a == b {
                Rational::zero()
            } else if a != 0 && b != 0 && owner[a].0 == owner[b].0 {
                arc(owner[a].0, owner[a].1, owner[b].1)
            } else {
                to_hub(a) + to_hub(b)
            };
        }
    }
    Ok(FiniteMetricSpace::assemble(n, dist))
}

/// Result of [`covering_number`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoveringNumber {
    pub count: usize,
    /// `false` when the count is a greedy upper bound.
    pub exact: bool,
}

/// Spaces up to this many points get an exact covering number.
pub const DEFAULT_EXACT_THRESHOLD: usize = 64;

/// Minimum number of open `eps`-balls centred at points that cover the space.
pub fn covering_number(space: &FiniteMetricSpace, eps: Rational) -> Result<CoveringNumber, SpaceError> {
    covering_number_with(space, eps, DEFAULT_EXACT_THRESHOLD)
}

pub fn covering_number_with(
    space: &FiniteMetricSpace,
    eps: Rational,
    exact_threshold: usize,
) -> Result<CoveringNumber, SpaceError> {
    if eps <= Rational::zero() {
        return Err(SpaceError::NonpositiveEps);
    }
    let n = space.len();
    let sets: Vec<BitSet> = (0..n)
        .map(|c| {
            let mut s = BitSet::new(n);
            for v in 0..n {
                if space.dist(c, v) < eps {
                    s.insert(v);
                }
            }
            s
        })
        .collect();
    let greedy = greedy_cover(n, &sets);
    if n > exact_threshold {
        return Ok(CoveringNumber { count: greedy, exact: false });
    }
    let mut solver = SetCover::new(n, sets, greedy);
    let count = solver.solve();
    Ok(CoveringNumber { count, exact: true })
}

#[derive(Clone, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet { words: vec![0; n.div_ceil(64).max(1)] }
    }
    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (i % 64);
    }
    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn and_not_count(&self, other: &BitSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }
    fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }
    fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

fn greedy_cover(n: usize, sets: &[BitSet]) -> usize {
    let mut covered = BitSet::new(n);
    let mut used = 0;
    while covered.count() < n {
        let best = (0..sets.len())
            .max_by_key(|&i| (sets[i].and_not_count(&covered), Reverse(i)))
            .expect("nonempty space");
        covered.union_with(&sets[best]);
        used += 1;
    }
    used
}

/// Branch and bound minimum set cover over bitsets.
struct SetCover {
    n: usize,
    sets: Vec<BitSet>,
    best: usize,
}

impl SetCover {
    fn new(n: usize, mut sets: Vec<BitSet>, upper: usize) -> Self {
        // drop duplicate and dominated sets
        let mut keep: Vec<BitSet> = Vec::new();
        sets.sort_by_key(|s| Reverse(s.count()));
        for s in sets {
            if !keep.iter().any(|k| s.is_subset(k)) {
                keep.push(s);
            }
        }
        SetCover { n, sets: keep, best: upper }
    }

    fn solve(&mut self) -> usize {
        let covered = BitSet::new(self.n);
        self.branch(&covered, 0);
        self.best
    }

    fn branch(&mut self, covered: &BitSet, used: usize) {
        let remaining = self.n - covered.count();
        if remaining == 0 {
            self.best = self.best.min(used);
            return;
        }
        let widest = self
            .sets
            .iter()
            .map(|s| s.and_not_count(covered))
            .max()
            .unwrap_or(0);
        if widest == 0 || used + remaining.div_ceil(widest) >= self.best {
            return;
        }
        // branch on the uncovered point with the fewest candidate sets
        let mut pick = None;
        let mut fewest = usize::MAX;
        for v in 0..self.n {
            if covered.contains(v) {
                continue;
            }
            let c = self.sets.iter().filter(|s| s.contains(v)).count();
            if c < fewest {
                fewest = c;
                pick = Some(v);
            }
        }
        let v = pick.expect("uncovered point exists");
        let mut options: Vec<usize> = (0..self.sets.len()).filter(|&i| self.sets[i].contains(v)).collect();
        options.sort_by_key(|&i| Reverse(self.sets[i].and_not_count(covered)));
        for i in options {
            let mut next = covered.clone();
            next.union_with(&self.sets[i]);
            self.branch(&next, used + 1);
        }
    }
}
