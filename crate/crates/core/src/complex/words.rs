//! Words in free groups. Letter `g + 1` is generator `g`, `-(g + 1)` its
//! inverse; `0` never occurs.

pub type Word = Vec<i32>;

#[inline]
pub fn letter(gen: usize, positive: bool) -> i32 {
    let l = gen as i32 + 1;
    if positive {
        l
    } else {
        -l
    }
}

#[inline]
pub fn gen_of(l: i32) -> usize {
    (l.unsigned_abs() - 1) as usize
}

/// Appends letters to an already reduced word, cancelling as it goes.
pub fn push_reduced(acc: &mut Word, letters: &[i32]) {
    for &l in letters {
        if acc.last() == Some(&-l) {
            acc.pop();
        } else {
            acc.push(l);
        }
    }
}

pub fn reduce(w: &[i32]) -> Word {
    let mut out = Vec::with_capacity(w.len());
    push_reduced(&mut out, w);
    out
}

pub fn inverse(w: &[i32]) -> Word {
    w.iter().rev().map(|&l| -l).collect()
}

/// Free and cyclic reduction.
pub fn cyclic_reduce(w: &[i32]) -> Word {
    let r = reduce(w);
    let mut lo = 0;
    let mut hi = r.len();
    while hi - lo >= 2 && r[lo] == -r[hi - 1] {
        lo += 1;
        hi -= 1;
    }
    r[lo..hi].to_vec()
}

/// Lexicographically least rotation of a cyclically reduced word.
pub fn least_rotation(w: &[i32]) -> Word {
    let n = w.len();
    if n == 0 {
        return Vec::new();
    }
    // Booth's algorithm
    let at = |i: usize| w[i % n];
    let mut f = vec![usize::MAX; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = at(j);
        let mut i = f[j - k - 1];
        while i != usize::MAX && sj != at(k + i + 1) {
            if sj < at(k + i + 1) {
                k = j - i - 1;
            }
            i = f[i];
        }
        if i == usize::MAX && sj != at(k) {
            if sj < at(k) {
                k = j;
            }
            f[j - k] = usize::MAX;
        } else {
            f[j - k] = if i == usize::MAX { 0 } else { i + 1 };
        }
    }
    (0..n).map(|i| at(k + i)).collect()
}

/// Canonical representative of the conjugacy class of `w`.
pub fn conjugacy_key(w: &[i32]) -> Word {
    least_rotation(&cyclic_reduce(w))
}

/// Canonical representative of the conjugacy classes of `w` and `w⁻¹`
/// taken together.
pub fn conjugacy_key_unsigned(w: &[i32]) -> Word {
    let a = conjugacy_key(w);
    let b = conjugacy_key(&inverse(&a));
    a.min(b)
}

/// Exponent-sum vector.
pub fn abelianize(w: &[i32], ngens: usize) -> Vec<i128> {
    let mut v = vec![0i128; ngens];
    for &l in w {
        v[gen_of(l)] += l.signum() as i128;
    }
    v
}

/// Replaces every generator by a word.
pub fn substitute(w: &[i32], images: &[Word]) -> Word {
    let mut out = Vec::new();
    for &l in w {
        let img = &images[gen_of(l)];
        if l > 0 {
            push_reduced(&mut out, img);
        } else {
            push_reduced(&mut out, &inverse(img));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction() {
        assert_eq!(reduce(&[1, 2, -2, -1, 3]), vec![3]);
        assert_eq!(cyclic_reduce(&[-1, 2, 3, 1]), vec![2, 3]);
        assert_eq!(cyclic_reduce(&[1, -1]), Vec::<i32>::new());
        assert_eq!(inverse(&[1, -2]), vec![2, -1]);
    }

    #[test]
    fn rotations() {
        assert_eq!(least_rotation(&[3, 1, 2]), vec![1, 2, 3]);
        assert_eq!(least_rotation(&[2, -1, 2, -1]), vec![-1, 2, -1, 2]);
        assert_eq!(least_rotation(&[1, 1, 1]), vec![1, 1, 1]);
        for w in [vec![2, 1, 2, 1, 1], vec![5, -3, 4, 4, -3, 1], vec![1, 2, 1, 2, 1, 2, 0 + 3]] {
            let brute = (0..w.len())
                .map(|k| w[k..].iter().chain(&w[..k]).copied().collect::<Vec<_>>())
                .min()
                .unwrap();
            assert_eq!(least_rotation(&w), brute);
        }
        assert_eq!(conjugacy_key(&[2, 1, -2]), vec![1]);
        assert_eq!(conjugacy_key_unsigned(&[-1]), vec![-1]);
        assert_eq!(conjugacy_key_unsigned(&[1]), vec![-1]);
    }

    #[test]
    fn substitution() {
        let images = vec![vec![2, 2], vec![2]];
        assert_eq!(substitute(&[1, -2], &images), vec![2]);
        assert_eq!(abelianize(&[1, -2, 1], 2), vec![2, -1]);
    }
}
