//! Integer lattices: an incremental echelon basis giving canonical coset
//! representatives, Smith invariants, and ranks modulo a prime.

use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("integer overflow in lattice arithmetic")]
pub struct LatticeOverflow;

type R<T> = Result<T, LatticeOverflow>;

fn mul(a: i128, b: i128) -> R<i128> {
    a.checked_mul(b).ok_or(LatticeOverflow)
}

fn axpy(dst: &mut [i128], a: i128, src: &[i128]) -> R<()> {
    if a == 0 {
        return Ok(());
    }
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d = d.checked_add(mul(a, s)?).ok_or(LatticeOverflow)?;
        }
    }
    Ok(())
}

fn leading(v: &[i128]) -> Option<usize> {
    v.iter().position(|&x| x != 0)
}

/// Row echelon basis of a sublattice of Z^dim with positive pivots.
#[derive(Debug, Clone, Default)]
pub struct Echelon {
    dim: usize,
    /// `(pivot column, row)`, sorted by pivot column.
    rows: Vec<(usize, Vec<i128>)>,
}

impl Echelon {
    pub fn new(dim: usize) -> Self {
        Echelon { dim, rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i128]> {
        self.rows.iter().map(|(_, r)| r.as_slice())
    }

    /// `true` when the lattice is all of Z^dim.
    pub fn is_everything(&self) -> bool {
        self.rows.len() == self.dim && self.rows.iter().all(|(c, r)| r[*c] == 1)
    }

    fn find(&self, col: usize) -> Result<usize, usize> {
        self.rows.binary_search_by_key(&col, |(c, _)| *c)
    }

    /// Canonical representative of `v + L`: every pivot coordinate lands in
    /// `[0, pivot)`.
    pub fn residue(&self, v: &[i128]) -> R<Vec<i128>> {
        let mut v = v.to_vec();
        for (c, row) in &self.rows {
            let q = Integer::div_floor(&v[*c], &row[*c]);
            axpy(&mut v, -q, row)?;
        }
        Ok(v)
    }

    pub fn contains(&self, v: &[i128]) -> R<bool> {
        Ok(self.residue(v)?.iter().all(|&x| x == 0))
    }

    /// Adds `v` to the generating set. Returns `true` when the lattice grew.
    pub fn insert(&mut self, v: &[i128]) -> R<bool> {
        let mut v = v.to_vec();
        let mut changed = false;
        while let Some(c) = leading(&v) {
            match self.find(c) {
                Err(at) => {
                    if v[c] < 0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                    self.rows.insert(at, (c, v));
                    self.renormalize()?;
                    return Ok(true);
                }
                Ok(i) => {
                    let p = self.rows[i].1[c];
                    let a = v[c];
                    if a % p == 0 {
                        axpy(&mut v, -(a / p), &self.rows[i].1)?;
                        continue;
                    }
                    // Bezout: g = s p + t a
                    let e = p.extended_gcd(&a);
                    let (g, s, t) = (e.gcd, e.x, e.y);
                    let old = self.rows[i].1.clone();
                    let mut new_row = vec![0i128; self.dim];
                    axpy(&mut new_row, s, &old)?;
                    axpy(&mut new_row, t, &v)?;
                    let mut rest = vec![0i128; self.dim];
                    axpy(&mut rest, a / g, &old)?;
                    axpy(&mut rest, -(p / g), &v)?;
                    self.rows[i].1 = new_row;
                    changed = true;
                    v = rest;
                }
            }
        }
        if changed {
            self.renormalize()?;
        }
        Ok(changed)
    }

    /// Brings the basis to Hermite normal form: every row reduced into
    /// `[0, pivot)` at the pivot columns of the rows below it.
    fn renormalize(&mut self) -> R<()> {
        for j in (0..self.rows.len()).rev() {
            let mut row = std::mem::take(&mut self.rows[j].1);
            for (c, below) in &self.rows[j + 1..] {
                let q = Integer::div_floor(&row[*c], &below[*c]);
                axpy(&mut row, -q, below)?;
            }
            self.rows[j].1 = row;
        }
        Ok(())
    }

    /// Nontrivial Smith invariants (entries > 1) of the lattice basis.
    pub fn torsion(&self) -> R<Vec<u128>> {
        let m: Vec<Vec<i128>> = self.rows.iter().map(|(_, r)| r.clone()).collect();
        Ok(smith_diagonal(m)?.into_iter().filter(|&d| d > 1).collect())
    }
}

/// Diagonal of the Smith normal form (nonzero entries, each dividing the
/// next).
pub fn smith_diagonal(mut m: Vec<Vec<i128>>) -> R<Vec<u128>> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pivot: smallest nonzero absolute value in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for (i, row) in m.iter().enumerate().skip(t) {
            for (j, &x) in row.iter().enumerate().skip(t) {
                if x != 0 && best.is_none_or(|(bi, bj)| x.abs() < m[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        m.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let p = m[t][t];
            let mut dirty = false;
            for i in (t + 1)..rows {
                let q = Integer::div_floor(&m[i][t], &p);
                if q != 0 {
                    let src = m[t].clone();
                    axpy(&mut m[i], -q, &src)?;
                }
                if m[i][t] != 0 {
                    dirty = true;
                }
            }
            for j in (t + 1)..cols {
                let q = Integer::div_floor(&m[t][j], &p);
                if q != 0 {
                    for row in m.iter_mut() {
                        let s = row[t];
                        row[j] = row[j].checked_sub(mul(q, s)?).ok_or(LatticeOverflow)?;
                    }
                }
                if m[t][j] != 0 {
                    dirty = true;
                }
            }
            if !dirty {
                // divisibility of the remaining block
                let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| m[i][j] % p != 0));
                match bad {
                    Some(i) => {
                        let src = m[i].clone();
                        axpy(&mut m[t], 1, &src)?;
                        continue;
                    }
                    None => break,
                }
            }
            // move the smallest remaining entry of row/column t to the pivot
            let mut best = (t, t);
            for i in t..rows {
                if m[i][t] != 0 && m[i][t].abs() < m[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if m[t][j] != 0 && m[t][j].abs() < m[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            m.swap(t, best.0);
            for row in m.iter_mut() {
                row.swap(t, best.1);
            }
        }
        diag.push(m[t][t].unsigned_abs());
        t += 1;
    }
    Ok(diag)
}

/// Rank over Z/p for p = 2^31 - 1; equals the rational rank for all but
/// finitely many coincidences and is used only as an independent check.
pub fn rank_mod_p(rows: &[Vec<i128>]) -> usize {
    const P: i128 = 2_147_483_647;
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.rem_euclid(P)).collect())
        .collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(pr) = (rank..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(rank, pr);
        let inv = mod_pow(m[rank][c], P - 2, P);
        for x in m[rank].iter_mut() {
            *x = *x * inv % P;
        }
        let pivot = m[rank].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != rank && row[c] != 0 {
                let f = row[c];
                for (x, &y) in row.iter_mut().zip(&pivot) {
                    *x = (*x - f * y).rem_euclid(P);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn mod_pow(mut b: i128, mut e: i128, p: i128) -> i128 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residues_are_canonical() {
        let mut e = Echelon::new(2);
        assert!(e.insert(&[2, 0]).unwrap());
        assert!(e.insert(&[0, 3]).unwrap());
        assert!(!e.insert(&[4, 6]).unwrap());
        assert_eq!(e.residue(&[5, -1]).unwrap(), vec![1, 2]);
        assert_eq!(e.residue(&[1, 2]).unwrap(), vec![1, 2]);
        assert!(e.contains(&[-2, 9]).unwrap());
        assert_eq!(e.torsion().unwrap(), vec![6]);
        assert!(e.insert(&[3, 0]).unwrap());
        assert!(!e.is_everything());
        assert_eq!(e.torsion().unwrap(), vec![3]);
    }

    #[test]
    fn gcd_merges() {
        let mut e = Echelon::new(3);
        e.insert(&[4, 1, 0]).unwrap();
        e.insert(&[6, 0, 1]).unwrap();
        assert_eq!(e.rank(), 2);
        // both relations together: lattice index computed through Smith
        let diag = smith_diagonal(e.rows().map(|r| r.to_vec()).collect()).unwrap();
        assert_eq!(diag, vec![1, 1]);
        assert!(e.contains(&[0, 3, -2]).unwrap());
        assert!(!e.contains(&[-2, 3, -2]).unwrap());
        assert!(!e.contains(&[1, 0, 0]).unwrap());
    }

    #[test]
    fn smith_examples() {
        let m = vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]];
        assert_eq!(smith_diagonal(m).unwrap(), vec![2, 6, 12]);
        assert_eq!(smith_diagonal(vec![vec![0, 0]]).unwrap(), Vec::<u128>::new());
    }

    #[test]
    fn ranks_mod_p() {
        assert_eq!(rank_mod_p(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(rank_mod_p(&[vec![1, 2], vec![0, 4]]), 2);
    }

    #[test]
    fn basis_is_order_independent() {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let dim = rng.gen_range(1..6);
            let gens: Vec<Vec<i128>> =
                (0..rng.gen_range(1..6)).map(|_| (0..dim).map(|_| rng.gen_range(-4..5)).collect()).collect();
            let build = |g: &[Vec<i128>]| {
                let mut e = Echelon::new(dim);
                for v in g {
                    e.insert(v).unwrap();
                }
                e.rows().map(|r| r.to_vec()).collect::<Vec<_>>()
            };
            let a = build(&gens);
            let mut shuffled = gens.clone();
            shuffled.shuffle(&mut rng);
            assert_eq!(a, build(&shuffled), "{gens:?}");
            let probe: Vec<i128> = (0..dim).map(|_| rng.gen_range(-9..10)).collect();
            let mut e = Echelon::new(dim);
            for v in &gens {
                e.insert(v).unwrap();
            }
            let r = e.residue(&probe).unwrap();
            // the residue differs from the probe by a lattice vector
            let diff: Vec<i128> = probe.iter().zip(&r).map(|(a, b)| a - b).collect();
            assert!(e.contains(&diff).unwrap());
            assert_eq!(e.residue(&r).unwrap(), r);
        }
    }
}
