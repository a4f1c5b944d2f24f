//! Group models: a presentation simplified by Tietze eliminations, with the
//! abelianized relation lattice kept alongside for exact H1 tests.

use std::collections::HashSet;

use super::lattice::{Echelon, LatticeOverflow};
use super::words::{
    abelianize, conjugacy_key_unsigned, cyclic_reduce, gen_of, inverse, letter, reduce, substitute, Word,
};

/// Limit on the total letter count carried through the simplification.
pub const DEFAULT_SIZE_CAP: usize = 2_000_000;

/// Shape of the simplified presentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    /// No relators survive: free on the surviving generators.
    Free,
    /// At most one generator survives, or all commutators of survivors are
    /// relators.
    Abelian,
    /// Anything else; only H1 and search are available.
    General,
}

/// Why a word is known to be nontrivial.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Obstruction {
    /// Canonical nonzero representative of the word's image in H1.
    H1Residue(Vec<i64>),
    /// Nonempty reduced image in a free group (in model generators).
    FreeWord(Vec<i32>),
}

/// Outcome of evaluating a word in a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Triviality {
    Trivial,
    NonTrivial(Obstruction),
    Undetermined,
}

/// Canonical identity of a group element, when the model has one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassKey {
    Word(Word),
    Residue(Vec<i128>),
}

#[derive(Debug, Clone)]
pub struct GroupModel {
    ngens: usize,
    kind: GroupKind,
    survivors: Vec<usize>,
    relators: Vec<Word>,
    sigma: Vec<Word>,
    lattice: Echelon,
    simplified: bool,
}

impl GroupModel {
    /// Builds a model of `<g_0..g_{ngens-1} | relators>`.
    pub fn new<I>(ngens: usize, relators: I, size_cap: usize) -> Result<Self, LatticeOverflow>
    where
        I: IntoIterator<Item = Word>,
    {
        let mut lattice = Echelon::new(ngens);
        let mut seen = HashSet::new();
        let mut rels: Vec<Word> = Vec::new();
        for r in relators {
            let r = cyclic_reduce(&r);
            if r.is_empty() {
                continue;
            }
            if seen.insert(conjugacy_key_unsigned(&r)) {
                lattice.insert(&abelianize(&r, ngens))?;
                rels.push(r);
            }
        }
        let mut model = GroupModel {
            ngens,
            kind: GroupKind::General,
            survivors: Vec::new(),
            relators: Vec::new(),
            sigma: Vec::new(),
            lattice,
            simplified: true,
        };
        model.simplify(rels, size_cap);
        Ok(model)
    }

    fn simplify(&mut self, mut rels: Vec<Word>, cap: usize) {
        let n = self.ngens;
        let mut alive = vec![true; n];
        let mut eliminated: Vec<(usize, Word)> = Vec::new();
        normalize_set(&mut rels);
        loop {
            // shortest relator with a generator occurring exactly once
            // rels is sorted by length, so the first hit is a shortest one
            let mut pick: Option<(usize, usize)> = None;
            let mut counts = vec![0u32; n];
            for (ri, r) in rels.iter().enumerate() {
                for &l in r {
                    counts[gen_of(l)] += 1;
                }
                let g = r.iter().map(|&l| gen_of(l)).filter(|&g| counts[g] == 1).min();
                for &l in r {
                    counts[gen_of(l)] = 0;
                }
                if let Some(g) = g {
                    pick = Some((ri, g));
                    break;
                }
            }
            let Some((ri, g)) = pick else { break };
            let r = rels.remove(ri);
            let at = r.iter().position(|&l| gen_of(l) == g).expect("generator occurs");
            let rotated: Word = r[at..].iter().chain(&r[..at]).copied().collect();
            let rest = &rotated[1..];
            let repl = if rotated[0] > 0 { inverse(rest) } else { rest.to_vec() };
            alive[g] = false;
            let mut images: Vec<Word> = (0..n).map(|h| vec![letter(h, true)]).collect();
            images[g] = repl.clone();
            let mut total = 0usize;
            for rel in rels.iter_mut() {
                if rel.iter().any(|&l| gen_of(l) == g) {
                    *rel = cyclic_reduce(&substitute(rel, &images));
                }
                total += rel.len();
            }
            eliminated.push((g, repl));
            normalize_set(&mut rels);
            if total > cap {
                self.simplified = false;
                break;
            }
        }
        // resolve the substitution in reverse elimination order
        let mut sigma: Vec<Word> = (0..n).map(|h| vec![letter(h, true)]).collect();
        let mut resolved_total = 0usize;
        for (g, repl) in eliminated.iter().rev() {
            let img = reduce(&substitute(repl, &sigma));
            resolved_total += img.len();
            sigma[*g] = img;
            if resolved_total > cap {
                self.simplified = false;
            }
        }
        self.survivors = (0..n).filter(|&h| alive[h]).collect();
        self.sigma = sigma;
        self.kind = classify(&self.survivors, &rels, self.simplified);
        self.relators = rels;
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn ngens(&self) -> usize {
        self.ngens
    }

    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn lattice(&self) -> &Echelon {
        &self.lattice
    }

    /// `true` when the group is known to be trivial.
    pub fn is_trivial(&self) -> bool {
        self.kind != GroupKind::General && self.survivors.is_empty()
    }

    /// Image of `w` in the surviving generators, freely reduced.
    pub fn image(&self, w: &[i32]) -> Word {
        substitute(w, &self.sigma)
    }

    pub fn residue(&self, w: &[i32]) -> Result<Vec<i128>, LatticeOverflow> {
        self.lattice.residue(&abelianize(w, self.ngens))
    }

    pub fn decide(&self, w: &[i32]) -> Triviality {
        let Ok(res) = self.residue(w) else { return Triviality::Undetermined };
        if res.iter().any(|&x| x != 0) {
            return Triviality::NonTrivial(Obstruction::H1Residue(narrow(&res)));
        }
        match self.kind {
            GroupKind::Free => {
                let img = self.image(w);
                if img.is_empty() {
                    Triviality::Trivial
                } else {
                    Triviality::NonTrivial(Obstruction::FreeWord(img))
                }
            }
            GroupKind::Abelian => Triviality::Trivial,
            GroupKind::General => Triviality::Undetermined,
        }
    }

    /// Canonical element identity, for free and abelian models.
    pub fn class_key(&self, w: &[i32]) -> Option<ClassKey> {
        match self.kind {
            GroupKind::Free => Some(ClassKey::Word(self.image(w))),
            GroupKind::Abelian => self.residue(w).ok().map(ClassKey::Residue),
            GroupKind::General => None,
        }
    }

    /// Key of the product of the element keyed by `key` with `w`.
    pub fn extend_key(&self, key: &ClassKey, w: &[i32]) -> Option<ClassKey> {
        match key {
            ClassKey::Word(k) => {
                let mut out = k.clone();
                super::words::push_reduced(&mut out, &self.image(w));
                Some(ClassKey::Word(out))
            }
            ClassKey::Residue(k) => {
                let mut v = abelianize(w, self.ngens);
                for (a, b) in v.iter_mut().zip(k) {
                    *a += b;
                }
                self.lattice.residue(&v).ok().map(ClassKey::Residue)
            }
        }
    }

    pub fn identity_key(&self) -> Option<ClassKey> {
        self.class_key(&[])
    }

    /// Key of a free homotopy class, identified with its inverse class.
    pub fn conjugacy_key(&self, key: &ClassKey) -> ClassKey {
        match key {
            ClassKey::Word(w) => ClassKey::Word(conjugacy_key_unsigned(w)),
            ClassKey::Residue(r) => {
                let neg: Vec<i128> = r.iter().map(|x| -x).collect();
                let neg = self.lattice.residue(&neg).unwrap_or(neg);
                ClassKey::Residue(r.clone().min(neg))
            }
        }
    }

    /// Free rank and torsion of H1.
    pub fn h1(&self) -> Result<(usize, Vec<u128>), LatticeOverflow> {
        Ok((self.ngens - self.lattice.rank(), self.lattice.torsion()?))
    }
}

fn narrow(v: &[i128]) -> Vec<i64> {
    v.iter().map(|&x| x.clamp(i64::MIN as i128, i64::MAX as i128) as i64).collect()
}

fn normalize_set(rels: &mut Vec<Word>) {
    let mut seen = HashSet::new();
    rels.retain(|r| !r.is_empty() && seen.insert(conjugacy_key_unsigned(r)));
    rels.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
}

fn classify(survivors: &[usize], rels: &[Word], simplified: bool) -> GroupKind {
    if rels.is_empty() && simplified {
        return GroupKind::Free;
    }
    if !simplified {
        return GroupKind::General;
    }
    if survivors.len() <= 1 {
        return GroupKind::Abelian;
    }
    let keys: HashSet<Word> = rels.iter().map(|r| conjugacy_key_unsigned(r)).collect();
    for (i, &a) in survivors.iter().enumerate() {
        for &b in &survivors[i + 1..] {
            let (x, y) = (letter(a, true), letter(b, true));
            if !keys.contains(&conjugacy_key_unsigned(&[x, y, -x, -y])) {
                return GroupKind::General;
            }
        }
    }
    GroupKind::Abelian
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_groups() {
        let m = GroupModel::new(2, Vec::new(), DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(m.kind(), GroupKind::Free);
        assert_eq!(m.decide(&[1, 2, -1, -2]), Triviality::NonTrivial(Obstruction::FreeWord(vec![1, 2, -1, -2])));
        assert_eq!(m.decide(&[1, -1]), Triviality::Trivial);
    }

    #[test]
    fn single_letter_relator_kills() {
        let m = GroupModel::new(1, vec![vec![1]], DEFAULT_SIZE_CAP).unwrap();
        assert!(m.is_trivial());
        assert_eq!(m.decide(&[1, 1]), Triviality::Trivial);
    }

    #[test]
    fn elimination_keeps_quotient() {
        // <a, b | a b^-1>  is free on one generator
        let m = GroupModel::new(2, vec![vec![1, -2]], DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(m.kind(), GroupKind::Free);
        assert_eq!(m.survivors().len(), 1);
        assert_eq!(m.decide(&[1, -2]), Triviality::Trivial);
        assert!(matches!(m.decide(&[1, 2]), Triviality::NonTrivial(_)));
        assert_eq!(m.class_key(&[1]), m.class_key(&[2]));
    }

    #[test]
    fn abelian_and_torsion() {
        let z2 = GroupModel::new(2, vec![vec![1, 2, -1, -2]], DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(z2.kind(), GroupKind::Abelian);
        assert_eq!(z2.h1().unwrap(), (2, vec![]));
        assert_eq!(z2.decide(&[1, 2, -1, -2]), Triviality::Trivial);
        let z3 = GroupModel::new(1, vec![vec![1, 1, 1]], DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(z3.kind(), GroupKind::Abelian);
        assert_eq!(z3.h1().unwrap(), (0, vec![3]));
        assert!(matches!(z3.decide(&[1]), Triviality::NonTrivial(Obstruction::H1Residue(_))));
        assert_eq!(z3.decide(&[1, 1, 1, 1, -1]), Triviality::Trivial);
    }

    #[test]
    fn general_groups_fall_back() {
        // <a, b | a^2, b^2>: infinite dihedral, not abelian
        let d = GroupModel::new(2, vec![vec![1, 1], vec![2, 2]], DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(d.kind(), GroupKind::General);
        assert_eq!(d.decide(&[1, 2, 1, 2]), Triviality::Undetermined);
        assert!(matches!(d.decide(&[1]), Triviality::NonTrivial(_)));
    }
}
