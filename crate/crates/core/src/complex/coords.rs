//! Generator coordinates for deck groups.
//!
//! Base coordinates use the graph of the finest closed metric entourage:
//! generators are its non-tree edges, and each entourage edge is replaced
//! by a base path inside the two balls. Edge coordinates use the
//! entourage's own graph and serve as the fallback.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, OnceLock};

use super::words::{letter, push_reduced, Word};
use crate::entourage::Entourage;
use crate::rational::Rational;
use crate::space::FiniteMetricSpace;

/// Fewest-hop path from `x` to `y` through vertices accepted by `inside`,
/// lexicographically least among those. Returns the interior points.
pub fn lexmin_path<F>(adj: &[Vec<usize>], x: usize, y: usize, inside: F) -> Option<Vec<usize>>
where
    F: Fn(usize) -> bool,
{
    if x == y {
        return Some(Vec::new());
    }
    let mut hops = vec![usize::MAX; adj.len()];
    hops[y] = 0;
    let mut queue = VecDeque::from([y]);
    while let Some(u) = queue.pop_front() {
        if u == x {
            break;
        }
        for &v in &adj[u] {
            if hops[v] == usize::MAX && (v == x || inside(v)) {
                hops[v] = hops[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if hops[x] == usize::MAX {
        return None;
    }
    let mut path = Vec::new();
    let mut u = x;
    while hops[u] > 1 {
        u = *adj[u].iter().find(|&&v| hops[v] == hops[u] - 1).expect("layered");
        path.push(u);
    }
    Some(path)
}

/// BFS spanning tree from vertex 0 with smallest-index tie-break. Returns
/// parents (`parent[0] == 0`) or the first unreachable vertex.
pub fn bfs_tree(adj: &[Vec<usize>]) -> Result<Vec<usize>, usize> {
    let n = adj.len();
    let mut parent = vec![usize::MAX; n];
    if n == 0 {
        return Ok(parent);
    }
    parent[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if parent[v] == usize::MAX {
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    match parent.iter().position(|&p| p == usize::MAX) {
        Some(v) => Err(v),
        None => Ok(parent),
    }
}

fn is_tree_edge(parent: &[usize], u: usize, v: usize) -> bool {
    (parent[u] == v && u != 0) || (parent[v] == u && v != 0)
}

type PathEntry = Option<(Box<[usize]>, Word)>;

/// The base graph of a space with its spanning tree and a cache of
/// canonical edge refinements.
#[derive(Debug)]
pub struct BaseFrame {
    space: FiniteMetricSpace,
    base: Option<Rational>,
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    gen_index: HashMap<(usize, usize), usize>,
    gens: Vec<(usize, usize)>,
    canon: Vec<OnceLock<PathEntry>>,
}

impl BaseFrame {
    /// `None` when the base graph is disconnected.
    pub fn new(space: &FiniteMetricSpace) -> Option<Arc<Self>> {
        let n = space.len();
        let base = space.base_scale();
        let adj: Vec<Vec<usize>> = match base {
            Some(b) => (0..n)
                .map(|i| (0..n).filter(|&j| j != i && space.dist(i, j) == b).collect())
                .collect(),
            None => vec![Vec::new(); n],
        };
        let parent = bfs_tree(&adj).ok()?;
        let mut gens = Vec::new();
        for (i, nb) in adj.iter().enumerate() {
            for &j in nb {
                if j > i && !is_tree_edge(&parent, i, j) {
                    gens.push((i, j));
                }
            }
        }
        let gen_index = gens.iter().enumerate().map(|(g, &e)| (e, g)).collect();
        Some(Arc::new(BaseFrame {
            space: space.clone(),
            base,
            adj,
            parent,
            gen_index,
            gens,
            canon: (0..n * n).map(|_| OnceLock::new()).collect(),
        }))
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn ngens(&self) -> usize {
        self.gens.len()
    }

    pub fn generators(&self) -> &[(usize, usize)] {
        &self.gens
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub fn parent(&self) -> &[usize] {
        &self.parent
    }

    pub fn is_base_edge(&self, u: usize, v: usize) -> bool {
        self.base.is_some_and(|b| u != v && self.space.dist(u, v) == b)
    }

    /// Letter of a base step, `None` for tree edges and repeats.
    pub fn step_letter(&self, u: usize, v: usize) -> Option<i32> {
        if u == v || is_tree_edge(&self.parent, u, v) {
            return None;
        }
        let (a, b) = (u.min(v), u.max(v));
        self.gen_index.get(&(a, b)).map(|&g| letter(g, u < v))
    }

    /// Word of a walk whose steps are base edges or repeats.
    pub fn walk_word(&self, pts: &[usize]) -> Word {
        let mut w = Vec::new();
        for s in pts.windows(2) {
            debug_assert!(s[0] == s[1] || self.is_base_edge(s[0], s[1]));
            if let Some(l) = self.step_letter(s[0], s[1]) {
                push_reduced(&mut w, &[l]);
            }
        }
        w
    }

    /// Fewest-hop base path from `x` to `y` through points no farther from
    /// either end than `d(x, y)`, lexicographically least. Valid in every
    /// metric entourage that relates `x` and `y`.
    pub fn canonical(&self, x: usize, y: usize) -> Option<(Vec<usize>, Word)> {
        if x == y {
            return Some((Vec::new(), Vec::new()));
        }
        let (a, b) = (x.min(y), x.max(y));
        let n = self.space.len();
        let entry = self.canon[a * n + b].get_or_init(|| {
            let d = self.space.dist(a, b);
            let s = &self.space;
            let path = lexmin_path(&self.adj, a, b, |p| s.dist(a, p) <= d && s.dist(p, b) <= d)?;
            let mut walk = Vec::with_capacity(path.len() + 2);
            walk.push(a);
            walk.extend(&path);
            walk.push(b);
            let w = self.walk_word(&walk);
            Some((path.into_boxed_slice(), w))
        });
        let (path, w) = entry.as_ref()?;
        if x < y {
            Some((path.to_vec(), w.clone()))
        } else {
            let mut p = path.to_vec();
            p.reverse();
            Some((p, super::words::inverse(w)))
        }
    }
}

/// How the edges of one entourage map to group words.
#[derive(Debug, Clone)]
pub enum Coordinates {
    Base {
        frame: Arc<BaseFrame>,
        /// Edges `(x, y)`, `x < y`, whose canonical path leaves the balls.
        overrides: HashMap<(usize, usize), (Vec<usize>, Word)>,
    },
    Edge {
        parent: Vec<usize>,
        gen_index: HashMap<(usize, usize), usize>,
        gens: Vec<(usize, usize)>,
    },
}

/// Why no coordinates exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordError {
    NotConnected(usize),
}

impl Coordinates {
    /// Base coordinates when `e` contains the base graph and every edge has
    /// a base path in its ball intersection; edge coordinates otherwise.
    pub fn new(e: &Entourage, frame: Option<&Arc<BaseFrame>>) -> Result<Self, CoordError> {
        if let Some(frame) = frame {
            if let Some(c) = Self::base(e, frame) {
                return Ok(c);
            }
        }
        Self::edge(e)
    }

    pub fn base(e: &Entourage, frame: &Arc<BaseFrame>) -> Option<Self> {
        let n = e.len();
        for u in 0..n {
            if frame.adj[u].iter().any(|&v| !e.contains(u, v)) {
                return None;
            }
        }
        let mut overrides = HashMap::new();
        for (x, y) in e.edges() {
            if frame.is_base_edge(x, y) {
                continue;
            }
            let ok = frame
                .canonical(x, y)
                .is_some_and(|(p, _)| p.iter().all(|&v| e.contains(x, v) && e.contains(y, v)));
            if !ok {
                let path = lexmin_path(&frame.adj, x, y, |v| e.contains(x, v) && e.contains(y, v))?;
                let mut walk = vec![x];
                walk.extend(&path);
                walk.push(y);
                let w = frame.walk_word(&walk);
                overrides.insert((x, y), (path, w));
            }
        }
        Some(Coordinates::Base { frame: frame.clone(), overrides })
    }

    pub fn edge(e: &Entourage) -> Result<Self, CoordError> {
        let n = e.len();
        let adj: Vec<Vec<usize>> = (0..n).map(|i| e.neighbors(i).filter(|&j| j != i).collect()).collect();
        let parent = bfs_tree(&adj).map_err(CoordError::NotConnected)?;
        let mut gens = Vec::new();
        for (i, j) in e.edges() {
            if !is_tree_edge(&parent, i, j) {
                gens.push((i, j));
            }
        }
        let gen_index = gens.iter().enumerate().map(|(g, &ed)| (ed, g)).collect();
        Ok(Coordinates::Edge { parent, gen_index, gens })
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Coordinates::Base { .. })
    }

    pub fn ngens(&self) -> usize {
        match self {
            Coordinates::Base { frame, .. } => frame.ngens(),
            Coordinates::Edge { gens, .. } => gens.len(),
        }
    }

    pub fn frame(&self) -> Option<&Arc<BaseFrame>> {
        match self {
            Coordinates::Base { frame, .. } => Some(frame),
            Coordinates::Edge { .. } => None,
        }
    }

    /// Refinement path (interior points) used for the edge `(x, y)`; empty
    /// in edge coordinates.
    pub fn edge_path(&self, x: usize, y: usize) -> Vec<usize> {
        match self {
            Coordinates::Base { frame, overrides } => {
                if x == y || frame.is_base_edge(x, y) {
                    return Vec::new();
                }
                let (a, b) = (x.min(y), x.max(y));
                let mut p = match overrides.get(&(a, b)) {
                    Some((p, _)) => p.clone(),
                    None => frame.canonical(a, b).expect("validated edge").0,
                };
                if x > y {
                    p.reverse();
                }
                p
            }
            Coordinates::Edge { .. } => Vec::new(),
        }
    }

    /// Word of one entourage step.
    pub fn edge_word(&self, x: usize, y: usize) -> Word {
        match self {
            Coordinates::Base { frame, overrides } => {
                if x == y {
                    return Vec::new();
                }
                if frame.is_base_edge(x, y) {
                    return frame.step_letter(x, y).into_iter().collect();
                }
                let (a, b) = (x.min(y), x.max(y));
                let w = match overrides.get(&(a, b)) {
                    Some((_, w)) => w.clone(),
                    None => frame.canonical(a, b).expect("validated edge").1,
                };
                if x < y {
                    w
                } else {
                    super::words::inverse(&w)
                }
            }
            Coordinates::Edge { parent, gen_index, .. } => {
                if x == y || is_tree_edge(parent, x, y) {
                    return Vec::new();
                }
                let g = gen_index[&(x.min(y), x.max(y))];
                vec![letter(g, x < y)]
            }
        }
    }

    /// Reduced word of a chain.
    pub fn chain_word(&self, pts: &[usize]) -> Word {
        let mut w = Vec::new();
        for s in pts.windows(2) {
            push_reduced(&mut w, &self.edge_word(s[0], s[1]));
        }
        w
    }

    /// The chain with every step replaced by its refinement path.
    pub fn refine_points(&self, pts: &[usize]) -> Vec<usize> {
        let mut out = vec![pts[0]];
        for s in pts.windows(2) {
            out.extend(self.edge_path(s[0], s[1]));
            out.push(s[1]);
        }
        out
    }
}
