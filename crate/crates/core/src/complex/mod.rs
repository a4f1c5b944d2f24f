//! The triad complex of an entourage, its deck group, and nullity of loops.

pub mod coords;
pub mod lattice;
pub mod model;
pub mod search;
pub mod words;

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chains::{validate_chain, Chain, ChainError, MoveSequence};
use crate::entourage::{Entourage, EntourageError};

pub use coords::{BaseFrame, Coordinates};
pub use lattice::{Echelon, LatticeOverflow};
pub use model::{ClassKey, GroupKind, GroupModel, Obstruction, Triviality, DEFAULT_SIZE_CAP};
pub use words::Word;

use search::Trace;

/// Default number of states the contraction search may generate.
pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("vertex {0} is not reachable from the basepoint")]
    NotConnected(usize),
    #[error("entourage is not chained: pair ({0}, {1}) has no base path in its ball intersection")]
    NotChained(usize, usize),
    #[error("chain is not a loop")]
    NotALoop,
    #[error("integer overflow in the relation lattice")]
    Overflow,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Entourage(#[from] EntourageError),
}

impl From<LatticeOverflow> for ComplexError {
    fn from(_: LatticeOverflow) -> Self {
        ComplexError::Overflow
    }
}

impl From<coords::CoordError> for ComplexError {
    fn from(e: coords::CoordError) -> Self {
        match e {
            coords::CoordError::NotConnected(v) => ComplexError::NotConnected(v),
        }
    }
}

/// Calls `f(a, b, c)` for every triad `a < b < c` of `e`, in lexicographic order.
pub fn for_each_triad<F: FnMut(usize, usize, usize)>(e: &Entourage, mut f: F) {
    let n = e.len();
    let nbrs: Vec<Vec<usize>> = (0..n).map(|i| e.neighbors(i).filter(|&j| j > i).collect()).collect();
    for a in 0..n {
        for (k, &b) in nbrs[a].iter().enumerate() {
            for &c in &nbrs[a][k + 1..] {
                if e.contains(b, c) {
                    f(a, b, c);
                }
            }
        }
    }
}

/// Deck group of one entourage, held as coordinates plus a simplified model.
#[derive(Debug, Clone)]
pub struct EntourageGroup {
    entourage: Entourage,
    coords: Coordinates,
    model: GroupModel,
}

impl EntourageGroup {
    pub fn new(e: &Entourage) -> Result<Self, ComplexError> {
        let frame = BaseFrame::new(e.space());
        Self::with_frame(e, frame.as_ref())
    }

    /// Uses a shared base frame, so words of different entourages are
    /// directly comparable when both land in base coordinates.
    pub fn with_frame(e: &Entourage, frame: Option<&Arc<BaseFrame>>) -> Result<Self, ComplexError> {
        let coords = Coordinates::new(e, frame)?;
        Self::with_coords(e, coords)
    }

    pub fn with_coords(e: &Entourage, coords: Coordinates) -> Result<Self, ComplexError> {
        let mut rels = Vec::new();
        for_each_triad(e, |a, b, c| {
            let w = coords.chain_word(&[a, b, c, a]);
            if !w.is_empty() {
                rels.push(w);
            }
        });
        let model = GroupModel::new(coords.ngens(), rels, DEFAULT_SIZE_CAP)?;
        Ok(EntourageGroup { entourage: e.clone(), coords, model })
    }

    pub fn entourage(&self) -> &Entourage {
        &self.entourage
    }

    pub fn coords(&self) -> &Coordinates {
        &self.coords
    }

    pub fn model(&self) -> &GroupModel {
        &self.model
    }

    pub fn word(&self, pts: &[usize]) -> Word {
        self.coords.chain_word(pts)
    }

    pub fn decide(&self, pts: &[usize]) -> Triviality {
        self.model.decide(&self.word(pts))
    }

    pub fn is_trivial(&self) -> bool {
        self.model.is_trivial()
    }

    /// Decides whether `pts` is null, with a certificate either way when
    /// one is found.
    pub fn decide_null(&self, pts: &[usize], budget: usize) -> Result<NullityVerdict, ComplexError> {
        let e = &self.entourage;
        validate_chain(e, pts)?;
        if pts.first() != pts.last() {
            return Err(ComplexError::NotALoop);
        }
        let null = |moves, end: Vec<usize>, strategy, states| -> Result<NullityVerdict, ComplexError> {
            let seq = MoveSequence { start: pts.to_vec(), moves, end };
            seq.replay(e)?;
            Ok(NullityVerdict { verdict: Verdict::Null(seq), strategy, states })
        };
        if pts.iter().all(|&p| p == pts[0]) {
            return null(Vec::new(), pts.to_vec(), Strategy::FreeReduction, 0);
        }
        let w = self.word(pts);
        if w.is_empty() {
            // the loop is trivial already in the base graph (or edge graph)
            let mut t = Trace::new(pts.to_vec());
            if self.coords.is_base() {
                t.refine_with(|x, y| self.coords.edge_path(x, y));
            }
            t.cancel_backtracks();
            if t.is_constant() {
                return null(t.moves, t.points, Strategy::FreeReduction, 0);
            }
        }
        if let Triviality::NonTrivial(ob) = self.model.decide(&w) {
            let strategy = match ob {
                Obstruction::H1Residue(_) => Strategy::Abelianization,
                Obstruction::FreeWord(_) => Strategy::FreeReduction,
            };
            return Ok(NullityVerdict { verdict: Verdict::NonNull(ob), strategy, states: 0 });
        }
        let mut t = Trace::new(pts.to_vec());
        t.cone_collapse(e);
        if t.is_constant() {
            return null(t.moves, t.points, Strategy::BoundedSearch, 1);
        }
        let (found, states) = search::best_first(e, pts, budget);
        match found {
            Some(moves) => {
                let mut cur = pts.to_vec();
                for m in &moves {
                    crate::chains::apply_move_points(e, &mut cur, *m)?;
                }
                null(moves, cur, Strategy::BoundedSearch, states)
            }
            None => Ok(NullityVerdict { verdict: Verdict::Unknown { budget }, strategy: Strategy::BoundedSearch, states }),
        }
    }
}

/// Which layer of the cascade produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    FreeReduction,
    Abelianization,
    BoundedSearch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "certificate")]
pub enum Verdict {
    Null(MoveSequence),
    NonNull(Obstruction),
    Unknown { budget: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullityVerdict {
    pub verdict: Verdict,
    pub strategy: Strategy,
    /// Search states generated.
    pub states: usize,
}

impl NullityVerdict {
    pub fn is_null(&self) -> bool {
        matches!(self.verdict, Verdict::Null(_))
    }

    pub fn is_non_null(&self) -> bool {
        matches!(self.verdict, Verdict::NonNull(_))
    }
}

/// Presentation in plain edge coordinates: BFS tree at vertex 0, one
/// generator per non-tree edge, one relator per triad.
#[derive(Debug, Clone)]
pub struct GroupPresentation {
    group: EntourageGroup,
    parent: Vec<usize>,
    generators: Vec<(usize, usize)>,
    triads: Vec<(usize, usize, usize)>,
    relators: Vec<Word>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PresentationExport {
    pub basepoint: usize,
    pub generators: Vec<(usize, usize)>,
    pub relators: Vec<Word>,
    pub triads: Vec<(usize, usize, usize)>,
    pub spanning_tree: Vec<Option<usize>>,
}

pub fn build_presentation(e: &Entourage) -> Result<GroupPresentation, ComplexError> {
    let ch = e.is_chained();
    if let Some((x, y)) = ch.witness {
        return Err(ComplexError::NotChained(x, y));
    }
    let coords = Coordinates::edge(e)?;
    let Coordinates::Edge { parent, gens, .. } = &coords else { unreachable!() };
    let (parent, generators) = (parent.clone(), gens.clone());
    let mut triads = Vec::new();
    let mut relators = Vec::new();
    for_each_triad(e, |a, b, c| {
        triads.push((a, b, c));
        relators.push(coords.chain_word(&[a, b, c, a]));
    });
    let model = GroupModel::new(coords.ngens(), relators.iter().filter(|r| !r.is_empty()).cloned(), DEFAULT_SIZE_CAP)?;
    let group = EntourageGroup { entourage: e.clone(), coords, model };
    Ok(GroupPresentation { group, parent, generators, triads, relators })
}

impl GroupPresentation {
    pub fn entourage(&self) -> &Entourage {
        &self.group.entourage
    }

    pub fn group(&self) -> &EntourageGroup {
        &self.group
    }

    pub fn parent(&self) -> &[usize] {
        &self.parent
    }

    pub fn generators(&self) -> &[(usize, usize)] {
        &self.generators
    }

    pub fn triads(&self) -> &[(usize, usize, usize)] {
        &self.triads
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn tree_edge_count(&self) -> usize {
        self.parent.len() - 1
    }

    /// Tree path from the basepoint to `v`.
    pub fn tree_path(&self, v: usize) -> Vec<usize> {
        let mut p = vec![v];
        let mut u = v;
        while u != 0 {
            u = self.parent[u];
            p.push(u);
        }
        p.reverse();
        p
    }

    pub fn export(&self) -> PresentationExport {
        PresentationExport {
            basepoint: 0,
            generators: self.generators.clone(),
            relators: self.relators.clone(),
            triads: self.triads.clone(),
            spanning_tree: self
                .parent
                .iter()
                .enumerate()
                .map(|(v, &p)| if v == 0 { None } else { Some(p) })
                .collect(),
        }
    }
}

/// Freely reduced word of a loop; the tree conjugation to the basepoint
/// contributes no letters.
pub fn loop_word(pres: &GroupPresentation, lp: &Chain) -> Result<Word, ComplexError> {
    if !lp.is_loop() {
        return Err(ComplexError::NotALoop);
    }
    validate_chain(pres.entourage(), lp.points())?;
    Ok(pres.group.word(lp.points()))
}

/// Free rank and torsion coefficients of H1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct H1 {
    pub rank: usize,
    pub torsion: Vec<u128>,
}

impl H1 {
    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

pub fn h1(pres: &GroupPresentation) -> Result<H1, ComplexError> {
    let n = pres.generators.len();
    let mut ech = Echelon::new(n);
    for r in &pres.relators {
        ech.insert(&words::abelianize(r, n))?;
    }
    Ok(H1 { rank: n - ech.rank(), torsion: ech.torsion()? })
}

pub fn decide_null(pres: &GroupPresentation, lp: &Chain, budget: usize) -> Result<NullityVerdict, ComplexError> {
    if !lp.is_loop() {
        return Err(ComplexError::NotALoop);
    }
    pres.group.decide_null(lp.points(), budget)
}

/// Refinements into `E` of the `D`-triads, conjugated to the basepoint by
/// tree paths; duplicates by reduced word are dropped.
pub fn kernel_generators(pres: &GroupPresentation, d: &Entourage) -> Result<Vec<Chain>, ComplexError> {
    let e = pres.entourage();
    if !e.is_subset(d) {
        return Err(ChainError::NotRefinement.into());
    }
    if let Some((x, y)) = d.is_chained().witness {
        return Err(ComplexError::NotChained(x, y));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut failure = None;
    for_each_triad(d, |a, b, c| {
        if failure.is_some() {
            return;
        }
        let mut pts = pres.tree_path(a);
        for (x, y) in [(a, b), (b, c), (c, a)] {
            match crate::chains::refine_gap(d, e, x, y) {
                Some(inner) => pts.extend(inner),
                None => {
                    failure = Some((x, y));
                    return;
                }
            }
            pts.push(y);
        }
        let mut back = pres.tree_path(a);
        back.reverse();
        pts.extend(&back[1..]);
        if seen.insert(pres.group.word(&pts)) {
            out.push(pts);
        }
    });
    if let Some((x, y)) = failure {
        return Err(ComplexError::NotChained(x, y));
    }
    out.into_iter().map(|p| Ok(validate_chain(e, &p)?)).collect()
}
