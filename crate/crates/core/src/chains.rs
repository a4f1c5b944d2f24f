//! Chains, basic moves and the explicit homotopies built from them.
//!
//! A [`MoveSequence`] is the certificate format for every homotopy claim:
//! it replays from its start chain through legal moves to its end chain.

use std::collections::VecDeque;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entourage::{compose, Entourage};
use crate::rational::{render, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("empty chain")]
    Empty,
    #[error("vertex {vertex} out of range 0..{n}")]
    BadVertex { vertex: usize, n: usize },
    #[error("step {0} is not in the entourage")]
    StepNotInEntourage(usize),
    #[error("illegal move: {0}")]
    IllegalMove(String),
    #[error("moves may not remove an endpoint")]
    EndpointRemoval,
    #[error("chains do not share the junction point")]
    EndpointMismatch,
    #[error("chains are certified against different entourages")]
    EntourageMismatch,
    #[error("entourage does not contain the strict metric entourage at {0}")]
    EntourageTooSmall(String),
    #[error("padding target {target} is below the current step count {current}")]
    BadPadding { target: usize, current: usize },
    #[error("gap {gap} cannot be refined inside the ball intersection")]
    NotChained { gap: usize },
    #[error("refining entourage is not contained in the chain's entourage")]
    NotRefinement,
    #[error("precondition violated at index {0}")]
    PreconditionViolated(usize),
    #[error("chain is not a loop")]
    NotALoop,
    #[error("replay ended at {got:?}, expected {expected:?}")]
    ReplayMismatch { got: Vec<usize>, expected: Vec<usize> },
}

/// One basic move. Positions index the chain the move is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Move {
    /// Place `vertex` at index `pos`, between the points previously at
    /// `pos - 1` and `pos`.
    Insert { pos: usize, vertex: usize },
    /// Delete the point at index `pos`.
    Remove { pos: usize },
}

/// A replayable homotopy certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveSequence {
    pub start: Vec<usize>,
    pub moves: Vec<Move>,
    pub end: Vec<usize>,
}

impl MoveSequence {
    pub fn identity(points: Vec<usize>) -> Self {
        MoveSequence { start: points.clone(), moves: Vec::new(), end: points }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Composition: `self` followed by `next`.
    pub fn then(mut self, next: MoveSequence) -> Result<Self, ChainError> {
        if self.end != next.start {
            return Err(ChainError::EndpointMismatch);
        }
        self.moves.extend(next.moves);
        self.end = next.end;
        Ok(self)
    }

    /// Replays the moves in `e`, checking every intermediate chain and the
    /// final chain.
    pub fn replay(&self, e: &Entourage) -> Result<Chain, ChainError> {
        let mut chain = validate_chain(e, &self.start)?;
        for m in &self.moves {
            chain = apply_move(&chain, *m)?;
        }
        if chain.points != self.end {
            return Err(ChainError::ReplayMismatch { got: chain.points, expected: self.end.clone() });
        }
        Ok(chain)
    }

    /// Inverse homotopy: every move undone in reverse order.
    pub fn inverse(&self) -> Result<Self, ChainError> {
        let mut pts = self.start.clone();
        let mut inv = Vec::with_capacity(self.moves.len());
        for m in &self.moves {
            match *m {
                Move::Insert { pos, vertex } => {
                    check_insert_pos(&pts, pos)?;
                    pts.insert(pos, vertex);
                    inv.push(Move::Remove { pos });
                }
                Move::Remove { pos } => {
                    check_remove_pos(&pts, pos)?;
                    let v = pts.remove(pos);
                    inv.push(Move::Insert { pos, vertex: v });
                }
            }
        }
        inv.reverse();
        Ok(MoveSequence { start: self.end.clone(), moves: inv, end: self.start.clone() })
    }

    /// The same homotopy performed inside `prefix ++ chain ++ suffix`.
    pub fn embed(&self, prefix: &[usize], suffix: &[usize]) -> Self {
        let offset = prefix.len();
        let wrap = |pts: &[usize]| -> Vec<usize> {
            prefix.iter().chain(pts).chain(suffix).copied().collect()
        };
        MoveSequence {
            start: wrap(&self.start),
            moves: self
                .moves
                .iter()
                .map(|m| match *m {
                    Move::Insert { pos, vertex } => Move::Insert { pos: pos + offset, vertex },
                    Move::Remove { pos } => Move::Remove { pos: pos + offset },
                })
                .collect(),
            end: wrap(&self.end),
        }
    }
}

/// A nonempty vertex sequence whose consecutive pairs lie in its entourage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    points: Vec<usize>,
    entourage: Entourage,
}

impl Chain {
    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn into_points(self) -> Vec<usize> {
        self.points
    }

    pub fn entourage(&self) -> &Entourage {
        &self.entourage
    }

    pub fn first(&self) -> usize {
        self.points[0]
    }

    pub fn last(&self) -> usize {
        *self.points.last().expect("nonempty")
    }

    /// Number of steps.
    pub fn nu(&self) -> usize {
        self.points.len() - 1
    }

    /// Sum of step distances.
    pub fn length(&self) -> Rational {
        points_length(&self.entourage, &self.points)
    }

    pub fn is_loop(&self) -> bool {
        self.first() == self.last()
    }

    pub fn is_constant(&self) -> bool {
        self.points.iter().all(|&p| p == self.points[0])
    }
}

pub fn points_length(e: &Entourage, pts: &[usize]) -> Rational {
    let s = e.space();
    pts.windows(2).fold(Rational::zero(), |acc, w| acc + s.dist(w[0], w[1]))
}

pub fn validate_chain(e: &Entourage, points: &[usize]) -> Result<Chain, ChainError> {
    if points.is_empty() {
        return Err(ChainError::Empty);
    }
    let n = e.len();
    if let Some(&v) = points.iter().find(|&&v| v >= n) {
        return Err(ChainError::BadVertex { vertex: v, n });
    }
    if let Some(i) = points.windows(2).position(|w| !e.contains(w[0], w[1])) {
        return Err(ChainError::StepNotInEntourage(i));
    }
    Ok(Chain { points: points.to_vec(), entourage: e.clone() })
}

fn check_insert_pos(pts: &[usize], pos: usize) -> Result<(), ChainError> {
    if pos == 0 || pos >= pts.len() {
        return Err(ChainError::IllegalMove(format!(
            "insert position {pos} outside 1..{}",
            pts.len()
        )));
    }
    Ok(())
}

fn check_remove_pos(pts: &[usize], pos: usize) -> Result<(), ChainError> {
    if pos == 0 || pos + 1 >= pts.len() {
        if pos < pts.len() {
            return Err(ChainError::EndpointRemoval);
        }
        return Err(ChainError::IllegalMove(format!("remove position {pos} out of range")));
    }
    Ok(())
}

/// Applies one move to a bare point sequence after checking legality in `e`.
pub fn apply_move_points(e: &Entourage, pts: &mut Vec<usize>, m: Move) -> Result<(), ChainError> {
    match m {
        Move::Insert { pos, vertex } => {
            check_insert_pos(pts, pos)?;
            if vertex >= e.len() {
                return Err(ChainError::BadVertex { vertex, n: e.len() });
            }
            let (a, b) = (pts[pos - 1], pts[pos]);
            if !e.contains(a, vertex) || !e.contains(vertex, b) {
                return Err(ChainError::IllegalMove(format!(
                    "inserting {vertex} between {a} and {b} leaves the entourage"
                )));
            }
            pts.insert(pos, vertex);
        }
        Move::Remove { pos } => {
            check_remove_pos(pts, pos)?;
            let (a, b) = (pts[pos - 1], pts[pos + 1]);
            if !e.contains(a, b) {
                return Err(ChainError::IllegalMove(format!(
                    "removing position {pos} bridges {a} and {b} outside the entourage"
                )));
            }
            pts.remove(pos);
        }
    }
    Ok(())
}

pub fn apply_move(chain: &Chain, m: Move) -> Result<Chain, ChainError> {
    let mut pts = chain.points.clone();
    apply_move_points(&chain.entourage, &mut pts, m)?;
    Ok(Chain { points: pts, entourage: chain.entourage.clone() })
}

/// Replays `seq` in `e` and returns the final chain.
pub fn replay(e: &Entourage, seq: &MoveSequence) -> Result<Chain, ChainError> {
    seq.replay(e)
}

/// Concatenation sharing the junction point.
pub fn concat(a: &Chain, b: &Chain) -> Result<Chain, ChainError> {
    if a.entourage != b.entourage {
        return Err(ChainError::EntourageMismatch);
    }
    if a.last() != b.first() {
        return Err(ChainError::EndpointMismatch);
    }
    let mut pts = a.points.clone();
    pts.extend_from_slice(&b.points[1..]);
    Ok(Chain { points: pts, entourage: a.entourage.clone() })
}

pub fn reverse(a: &Chain) -> Chain {
    let mut pts = a.points.clone();
    pts.reverse();
    Chain { points: pts, entourage: a.entourage.clone() }
}

/// Removes interior points flanked by two steps shorter than `eps / 2`,
/// and repeated points.
///
/// Returns the shortened chain and the removal moves. With `pad_to`, the
/// result is padded with repeats of the first point to exactly that many
/// steps.
pub fn normalize(
    chain: &Chain,
    eps: Rational,
    pad_to: Option<usize>,
) -> Result<(Chain, MoveSequence), ChainError> {
    if eps <= Rational::zero() || !chain.entourage.sigma().at_least(eps) {
        return Err(ChainError::EntourageTooSmall(render(&eps)));
    }
    let space = chain.entourage.space();
    let half = eps / Rational::from_integer(2);
    let pts = &chain.points;
    let mut stack: Vec<usize> = Vec::with_capacity(pts.len());
    let mut moves = Vec::new();
    for &p in pts {
        while stack.len() >= 2 {
            let (a, b) = (stack[stack.len() - 2], stack[stack.len() - 1]);
            let stutter = a == b || b == p;
            if stutter || (space.dist(a, b) < half && space.dist(b, p) < half) {
                moves.push(Move::Remove { pos: stack.len() - 1 });
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(p);
    }
    if let Some(target) = pad_to {
        let current = stack.len() - 1;
        if target < current {
            return Err(ChainError::BadPadding { target, current });
        }
        if target > current && stack.len() < 2 {
            return Err(ChainError::BadPadding { target, current });
        }
        for _ in current..target {
            moves.push(Move::Insert { pos: 1, vertex: stack[0] });
            stack.insert(1, stack[0]);
        }
    }
    let seq = MoveSequence { start: pts.clone(), moves, end: stack.clone() };
    Ok((Chain { points: stack, entourage: chain.entourage.clone() }, seq))
}

/// Fewest-hop `f`-path from `x` to `y` inside `B(x,e) ∩ B(y,e)`, lexicographically
/// smallest among those; returns the interior points only.
pub fn refine_gap(e: &Entourage, f: &Entourage, x: usize, y: usize) -> Option<Vec<usize>> {
    if f.contains(x, y) {
        return Some(Vec::new());
    }
    let n = e.len();
    let inside = |v: usize| e.contains(x, v) && e.contains(y, v);
    // hop distance to y
    let mut hops = vec![usize::MAX; n];
    hops[y] = 0;
    let mut queue = VecDeque::from([y]);
    while let Some(u) = queue.pop_front() {
        if u == x {
            break;
        }
        for v in f.neighbors(u) {
            if hops[v] == usize::MAX && inside(v) {
                hops[v] = hops[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if hops[x] == usize::MAX {
        return None;
    }
    let mut path = Vec::with_capacity(hops[x]);
    let mut u = x;
    while hops[u] > 1 {
        u = f
            .neighbors(u)
            .find(|&v| hops[v] == hops[u] - 1)
            .expect("BFS layer has a predecessor");
        path.push(u);
    }
    Some(path)
}

/// Refines every gap of `chain` to an `f`-path inside the corresponding ball
/// intersection.
///
/// The returned sequence is the homotopy from the refined chain back to the
/// original, removing inserted points one at a time from the left end of
/// each gap.
pub fn refine(chain: &Chain, f: &Entourage) -> Result<(Chain, MoveSequence), ChainError> {
    let e = &chain.entourage;
    if !f.is_subset(e) {
        return Err(ChainError::NotRefinement);
    }
    let pts = &chain.points;
    let mut out = vec![pts[0]];
    let mut gaps = Vec::new();
    for (j, w) in pts.windows(2).enumerate() {
        let inner = refine_gap(e, f, w[0], w[1]).ok_or(ChainError::NotChained { gap: j })?;
        gaps.push((out.len(), inner.len()));
        out.extend(&inner);
        out.push(w[1]);
    }
    let mut moves = Vec::new();
    // work right to left so earlier positions stay valid
    for &(anchor, k) in gaps.iter().rev() {
        for _ in 0..k {
            moves.push(Move::Remove { pos: anchor });
        }
    }
    let seq = MoveSequence { start: out.clone(), moves, end: pts.clone() };
    Ok((Chain { points: out, entourage: f.clone() }, seq))
}

/// The homotopy from `alpha` to `beta` that swaps one interior point at a
/// time (insert a duplicate, insert the replacement between the copies,
/// remove both old copies).
///
/// Requires `alpha` to be an `f`-chain, `(x_i, y_i)` in `f`, `f² ⊆ E` and
/// `beta` to be a chain in `E`, where `E` is `alpha`'s entourage.
pub fn close_homotopy(alpha: &Chain, beta: &[usize], f: &Entourage) -> Result<MoveSequence, ChainError> {
    let e = &alpha.entourage;
    let x = &alpha.points;
    if beta.len() != x.len() {
        return Err(ChainError::PreconditionViolated(beta.len().min(x.len())));
    }
    if beta[0] != x[0] {
        return Err(ChainError::PreconditionViolated(0));
    }
    if beta.last() != x.last() {
        return Err(ChainError::PreconditionViolated(x.len() - 1));
    }
    if !compose(f, 2).is_subset(e) {
        return Err(ChainError::PreconditionViolated(0));
    }
    if let Some(i) = x.windows(2).position(|w| !f.contains(w[0], w[1])) {
        return Err(ChainError::PreconditionViolated(i));
    }
    for i in 0..x.len() {
        if beta[i] >= e.len() || !f.contains(x[i], beta[i]) {
            return Err(ChainError::PreconditionViolated(i));
        }
        if i > 0 && !e.contains(beta[i - 1], beta[i]) {
            return Err(ChainError::PreconditionViolated(i));
        }
    }
    let mut moves = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if x[i] == beta[i] {
            continue;
        }
        moves.push(Move::Insert { pos: i + 1, vertex: x[i] });
        moves.push(Move::Insert { pos: i + 1, vertex: beta[i] });
        moves.push(Move::Remove { pos: i });
        moves.push(Move::Remove { pos: i + 1 });
    }
    Ok(MoveSequence { start: x.clone(), moves, end: beta.to_vec() })
}

/// JSON form of a chain: `{"points": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainFile {
    pub points: Vec<usize>,
}

impl From<&Chain> for ChainFile {
    fn from(c: &Chain) -> Self {
        ChainFile { points: c.points.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entourage::metric_entourage;
    use crate::space::{covering_number, FiniteMetricSpace, GeneratorSpec};

    fn circle12() -> FiniteMetricSpace {
        FiniteMetricSpace::generate(&GeneratorSpec::Circle { n: 12, length: Rational::from_integer(1) }).unwrap()
    }

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn validation() {
        let c = circle12();
        let e = metric_entourage(&c, r(1, 6), false).unwrap();
        let single = validate_chain(&e, &[5]).unwrap();
        assert_eq!((single.nu(), single.length()), (0, Rational::zero()));
        assert_eq!(validate_chain(&e, &[0, 1, 2]).unwrap().length(), r(1, 6));
        assert_eq!(validate_chain(&e, &[0, 6]), Err(ChainError::StepNotInEntourage(0)));
        assert_eq!(validate_chain(&e, &[]), Err(ChainError::Empty));
    }

    #[test]
    fn moves() {
        let c = circle12();
        let e = metric_entourage(&c, r(1, 6), false).unwrap();
        let ch = validate_chain(&e, &[0, 1, 2]).unwrap();
        assert_eq!(apply_move(&ch, Move::Remove { pos: 0 }), Err(ChainError::EndpointRemoval));
        assert_eq!(apply_move(&ch, Move::Remove { pos: 2 }), Err(ChainError::EndpointRemoval));
        let short = apply_move(&ch, Move::Remove { pos: 1 }).unwrap();
        assert_eq!(short.points(), &[0, 2]);
        assert!(matches!(apply_move(&short, Move::Insert { pos: 1, vertex: 6 }), Err(ChainError::IllegalMove(_))));
        assert!(matches!(apply_move(&short, Move::Insert { pos: 0, vertex: 1 }), Err(ChainError::IllegalMove(_))));
    }

    #[test]
    fn concat_and_reverse() {
        let c = circle12();
        let e = metric_entourage(&c, r(1, 6), false).unwrap();
        let a = validate_chain(&e, &[0, 1]).unwrap();
        let b = validate_chain(&e, &[1, 2]).unwrap();
        let ab = concat(&a, &b).unwrap();
        assert_eq!(ab.points(), &[0, 1, 2]);
        assert_eq!(ab.length(), r(1, 6));
        assert_eq!(reverse(&reverse(&ab)), ab);
        assert_eq!(concat(&b, &b), Err(ChainError::EndpointMismatch));
    }

    #[test]
    fn normalization() {
        let c = circle12();
        let e = metric_entourage(&c, r(1, 6), false).unwrap();
        let ch = validate_chain(&e, &[0, 0, 0, 1]).unwrap();
        let (out, seq) = normalize(&ch, r(1, 6), None).unwrap();
        assert_eq!(out.points(), &[0, 1]);
        assert!(out.nu() <= 3);
        assert_eq!(seq.replay(&e).unwrap(), out);
        let (padded, seq) = normalize(&ch, r(1, 6), Some(3)).unwrap();
        assert_eq!(padded.nu(), 3);
        seq.replay(&e).unwrap();
        let single = validate_chain(&e, &[4]).unwrap();
        assert_eq!(normalize(&single, r(1, 6), None).unwrap().0, single);
        assert!(matches!(normalize(&ch, r(1, 3), None), Err(ChainError::EntourageTooSmall(_))));
    }

    #[test]
    fn refinement() {
        let c = circle12();
        let e = metric_entourage(&c, r(1, 3), false).unwrap();
        let f = metric_entourage(&c, r(1, 12), false).unwrap();
        let ch = validate_chain(&e, &[0, 4]).unwrap();
        let (fine, back) = refine(&ch, &f).unwrap();
        assert_eq!(fine.points(), &[0, 1, 2, 3, 4]);
        assert_eq!(back.replay(&e).unwrap().points(), &[0, 4]);
        let (same, _) = refine(&ch, &e).unwrap();
        assert_eq!(same.points(), ch.points());
        // per-gap size against the covering number at half scale
        let cover = covering_number(&c, r(1, 24)).unwrap().count;
        assert!(fine.nu() - 1 <= 2 * cover);
        let lp = validate_chain(&e, &[0, 4, 8, 0]).unwrap();
        let (fine, back) = refine(&lp, &f).unwrap();
        assert_eq!(fine.nu(), 12);
        back.replay(&e).unwrap();
    }

    #[test]
    fn close_homotopies() {
        let c = circle12();
        let f = metric_entourage(&c, r(1, 6), false).unwrap();
        let e = metric_entourage(&c, r(1, 3), false).unwrap();
        let alpha = validate_chain(&e, &[0, 1, 2]).unwrap();
        assert!(close_homotopy(&alpha, &[0, 1, 2], &f).unwrap().is_empty());
        let seq = close_homotopy(&alpha, &[0, 11, 2], &f).unwrap();
        assert_eq!(seq.len(), 4);
        assert_eq!(seq.replay(&e).unwrap().points(), &[0, 11, 2]);
        // (x_i, y_i) in F alone does not make beta a chain in E
        let alpha = validate_chain(&e, &[0, 2, 4, 6]).unwrap();
        assert_eq!(close_homotopy(&alpha, &[0, 0, 6, 6], &f), Err(ChainError::PreconditionViolated(2)));
    }

    #[test]
    fn inverse_and_embed() {
        let c = circle12();
        let e = metric_entourage(&c, r(1, 3), false).unwrap();
        let f = metric_entourage(&c, r(1, 6), false).unwrap();
        let alpha = validate_chain(&e, &[0, 1, 2, 3]).unwrap();
        let seq = close_homotopy(&alpha, &[0, 11, 1, 3], &f).unwrap();
        let inv = seq.inverse().unwrap();
        assert_eq!(inv.replay(&e).unwrap().points(), &[0, 1, 2, 3]);
        let wide = seq.embed(&[5, 4, 3, 2, 1], &[4]);
        assert_eq!(wide.start, vec![5, 4, 3, 2, 1, 0, 1, 2, 3, 4]);
        wide.replay(&e).unwrap();
    }

    #[test]
    fn move_json() {
        let seq = MoveSequence {
            start: vec![0, 1, 2],
            moves: vec![Move::Insert { pos: 1, vertex: 0 }, Move::Remove { pos: 2 }],
            end: vec![0, 0, 2],
        };
        let text = serde_json::to_string(&seq).unwrap();
        assert!(text.contains(r#"{"op":"insert","pos":1,"vertex":0}"#));
        assert_eq!(serde_json::from_str::<MoveSequence>(&text).unwrap(), seq);
    }
}
