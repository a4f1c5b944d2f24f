//! Searching for contractions of loops by basic moves.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::chains::Move;
use crate::entourage::Entourage;
use crate::rational::Rational;

/// Points plus the moves that produced them from a starting chain.
#[derive(Debug, Clone)]
pub struct Trace {
    pub points: Vec<usize>,
    pub moves: Vec<Move>,
}

impl Trace {
    pub fn new(points: Vec<usize>) -> Self {
        Trace { points, moves: Vec::new() }
    }

    fn remove(&mut self, pos: usize) {
        self.points.remove(pos);
        self.moves.push(Move::Remove { pos });
    }

    fn insert(&mut self, pos: usize, v: usize) {
        self.points.insert(pos, v);
        self.moves.push(Move::Insert { pos, vertex: v });
    }

    pub fn is_constant(&self) -> bool {
        self.points.iter().all(|&p| p == self.points[0])
    }

    /// Replaces every step by the given interior points, inserting them one
    /// at a time. The caller guarantees legality.
    pub fn refine_with<F: Fn(usize, usize) -> Vec<usize>>(&mut self, path: F) {
        let mut i = 0;
        while i + 1 < self.points.len() {
            let (x, y) = (self.points[i], self.points[i + 1]);
            let inner = path(x, y);
            for (k, &p) in inner.iter().enumerate() {
                self.insert(i + 1 + k, p);
            }
            i += inner.len() + 1;
        }
    }

    /// Removes repeats and immediate backtracks. Every removal bridges a pair
    /// that is already adjacent, so it is legal in any entourage.
    pub fn cancel_backtracks(&mut self) {
        let mut i = 1;
        while i + 1 < self.points.len() {
            let p = &self.points;
            if p[i] == p[i - 1] || p[i] == p[i + 1] {
                self.remove(i);
                i = i.saturating_sub(1).max(1);
            } else if p[i - 1] == p[i + 1] {
                self.remove(i);
                i = i.saturating_sub(1).max(1);
            } else {
                i += 1;
            }
        }
        // a leftover [x, x, ..., x] tail collapses through the rule above;
        // a lone interior repeat of an endpoint is handled there as well
    }

    /// Repeatedly removes runs of points lying in the ball of a fixed
    /// neighbour: from `x_i`, every `x_{i+1} .. x_{j-1}` goes when
    /// `x_{i+2} .. x_j` all lie in `B(x_i, E)`, and symmetrically from the
    /// right.
    pub fn cone_collapse(&mut self, e: &Entourage) {
        loop {
            let before = self.points.len();
            let mut i = 0;
            while i + 2 < self.points.len() {
                let x = self.points[i];
                let mut j = i + 1;
                while j + 1 < self.points.len() && e.contains(x, self.points[j + 1]) {
                    j += 1;
                }
                for _ in i + 1..j {
                    self.remove(i + 1);
                }
                i += 1;
            }
            let mut j = self.points.len() - 1;
            while j >= 2 {
                let y = self.points[j];
                let mut i = j - 1;
                while i >= 1 && e.contains(y, self.points[i - 1]) {
                    i -= 1;
                }
                for k in (i + 1..j).rev() {
                    self.remove(k);
                }
                j = i.min(j - 1);
            }
            self.cancel_backtracks();
            if self.points.len() == before {
                break;
            }
        }
    }
}

fn chain_length(e: &Entourage, pts: &[usize]) -> Rational {
    let s = e.space();
    pts.windows(2).map(|w| s.dist(w[0], w[1])).sum()
}

/// Best-first search over removals and single-point replacements, each
/// successor cone-collapsed. Returns the moves to a constant chain and the
/// number of states generated.
pub fn best_first(e: &Entourage, start: &[usize], budget: usize) -> (Option<Vec<Move>>, usize) {
    let mut first = Trace::new(start.to_vec());
    first.cone_collapse(e);
    if first.is_constant() {
        return (Some(first.moves), 1);
    }
    // arena of states: (points, parent, moves from parent)
    let mut arena: Vec<(Vec<usize>, usize, Vec<Move>)> = vec![(first.points.clone(), usize::MAX, first.moves)];
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    seen.insert(first.points.clone(), 0);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((chain_length(e, &first.points), first.points.len(), 0usize)));
    let n = e.len();
    while let Some(Reverse((_, _, id))) = heap.pop() {
        let pts = arena[id].0.clone();
        let mut succ: Vec<Trace> = Vec::new();
        for i in 1..pts.len() - 1 {
            if e.contains(pts[i - 1], pts[i + 1]) {
                let mut t = Trace::new(pts.clone());
                t.remove(i);
                succ.push(t);
            }
            for v in 0..n {
                if v != pts[i]
                    && e.contains(pts[i], v)
                    && e.contains(pts[i - 1], v)
                    && e.contains(v, pts[i + 1])
                {
                    let mut t = Trace::new(pts.clone());
                    t.insert(i + 1, v);
                    t.remove(i);
                    succ.push(t);
                }
            }
        }
        for mut t in succ {
            t.cone_collapse(e);
            if seen.contains_key(&t.points) {
                continue;
            }
            if arena.len() >= budget {
                return (None, arena.len());
            }
            let done = t.is_constant();
            seen.insert(t.points.clone(), arena.len());
            let key = (chain_length(e, &t.points), t.points.len(), arena.len());
            arena.push((t.points, id, t.moves));
            if done {
                let mut moves = Vec::new();
                let mut cur = arena.len() - 1;
                while cur != usize::MAX {
                    let (_, parent, ref m) = arena[cur];
                    moves.push(m.clone());
                    cur = parent;
                }
                moves.reverse();
                return (Some(moves.into_iter().flatten().collect()), arena.len());
            }
            heap.push(Reverse(key));
        }
    }
    (None, arena.len())
}
