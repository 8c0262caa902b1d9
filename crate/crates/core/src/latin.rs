//! The Latin squares behind every construction in this crate.
//!
//! For a prime `p` and slope `r` in `1..=p-1`, the square of order `p` is
//!
//! ```text
//! L_r(a, b) = b - r(a - 1)  (mod p),    a, b in 1..=p,
//! ```
//!
//! with residues labelled `1..=p` (residue 0 is written `p`). Distinct slopes
//! give mutually orthogonal squares. `Q_i^r` denotes the incidence matrix of
//! label `i` in `L_r` (a permutation matrix), and the modified incidence
//! matrix drops the first row and column of `Q_i^r`.
//!
//! Rows and columns of the returned matrices are 0-based: entry `(a, b)` of
//! a square (1-based, as above) lands at matrix position `(a-1, b-1)`.

use crate::gf2sparse::SparseBinaryMatrix;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LatinError {
    #[error("{0} is not prime")]
    NotPrime(usize),
    #[error("slope {r} outside 1..={max} for order {p}")]
    SlopeOutOfRange { r: usize, p: usize, max: usize },
    #[error("label {i} outside 1..={p}")]
    LabelOutOfRange { i: usize, p: usize },
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// `L_r` of prime order `p`, stored row-major with labels `1..=p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatinSquare {
    p: usize,
    r: usize,
    cells: Vec<u16>,
}

/// Construct `L_r(a, b) = b - r(a-1) mod p` for prime `p`, `1 <= r <= p-1`.
pub fn latin_square(p: usize, r: usize) -> Result<LatinSquare, LatinError> {
    if !is_prime(p) {
        return Err(LatinError::NotPrime(p));
    }
    if r == 0 || r >= p {
        return Err(LatinError::SlopeOutOfRange { r, p, max: p - 1 });
    }
    let mut cells = Vec::with_capacity(p * p);
    for a in 1..=p {
        for b in 1..=p {
            cells.push(label(p, b + (p - 1) * r * (a - 1)) as u16);
        }
    }
    Ok(LatinSquare { p, r, cells })
}

/// Map a nonnegative residue computation to the label alphabet `1..=p`
/// (residue 0 is written `p`).
pub(crate) fn label(p: usize, value: usize) -> usize {
    let m = value % p;
    if m == 0 {
        p
    } else {
        m
    }
}

/// Support of `Q_i^r` as 1-based pairs, one per row: row `a` carries its 1 at
/// column `i + r(a-1)` in label form. No validation; callers in this crate
/// pass checked parameters.
pub(crate) fn q_support(p: usize, r: usize, i: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=p).map(move |a| (a, label(p, i + r * (a - 1))))
}

impl LatinSquare {
    pub fn order(&self) -> usize {
        self.p
    }

    pub fn slope(&self) -> usize {
        self.r
    }

    /// `L_r(a, b)` with 1-based `a, b`.
    pub fn value(&self, a: usize, b: usize) -> usize {
        assert!(
            (1..=self.p).contains(&a) && (1..=self.p).contains(&b),
            "cell ({a}, {b}) outside 1..={}",
            self.p
        );
        self.cells[(a - 1) * self.p + (b - 1)] as usize
    }

    /// Every label appears exactly once per row and per column.
    pub fn is_latin(&self) -> bool {
        fn line_ok(p: usize, seen: &mut [bool], mut cells: impl Iterator<Item = u16>) -> bool {
            seen.fill(false);
            cells.all(|v| {
                let v = v as usize;
                let fresh = (1..=p).contains(&v) && !seen[v];
                if fresh {
                    seen[v] = true;
                }
                fresh
            })
        }
        let p = self.p;
        let mut seen = vec![false; p + 1];
        (0..p).all(|a| {
            line_ok(p, &mut seen, (0..p).map(|b| self.cells[a * p + b]))
                && line_ok(p, &mut seen, (0..p).map(|b| self.cells[b * p + a]))
        })
    }

    /// Orthogonality: superimposing the two squares yields every ordered
    /// label pair exactly once.
    pub fn orthogonal_to(&self, other: &LatinSquare) -> bool {
        if self.p != other.p {
            return false;
        }
        let p = self.p;
        let mut seen = vec![false; (p + 1) * (p + 1)];
        for idx in 0..p * p {
            let key = self.cells[idx] as usize * (p + 1) + other.cells[idx] as usize;
            if seen[key] {
                return false;
            }
            seen[key] = true;
        }
        true
    }

    /// 1-based cells `(a, b)` carrying label `i`: the support of `Q_i^r`.
    /// One cell per row, so the result is sorted by `a`.
    pub fn label_support(&self, i: usize) -> Result<Vec<(usize, usize)>, LatinError> {
        if i == 0 || i > self.p {
            return Err(LatinError::LabelOutOfRange { i, p: self.p });
        }
        Ok(q_support(self.p, self.r, i).collect())
    }

    /// Incidence matrix `Q_i^r`: `p x p`, 1 at `(a-1, b-1)` iff `L_r(a,b) = i`.
    pub fn incidence(&self, i: usize) -> Result<SparseBinaryMatrix, LatinError> {
        let support = self.label_support(i)?;
        Ok(SparseBinaryMatrix::from_triples(
            self.p,
            self.p,
            support.into_iter().map(|(a, b)| (a - 1, b - 1)),
        )
        .expect("incidence support is in range"))
    }

    /// Modified incidence matrix: `Q_i^r` with its first row and column
    /// removed, i.e. `(p-1) x (p-1)` with 1 at `(a-1, b-1)` iff
    /// `L_r(a+1, b+1) = i` for `a, b in 1..=p-1`.
    pub fn modified_incidence(&self, i: usize) -> Result<SparseBinaryMatrix, LatinError> {
        let support = self.label_support(i)?;
        Ok(SparseBinaryMatrix::from_triples(
            self.p - 1,
            self.p - 1,
            support
                .into_iter()
                .filter(|&(a, b)| a >= 2 && b >= 2)
                .map(|(a, b)| (a - 2, b - 2)),
        )
        .expect("modified incidence support is in range"))
    }
}

/// Support of the modified incidence matrix of label 1 as 1-based pairs
/// within `1..=p-1`: row `a` has its single 1 at column `r*a mod p` (never 0
/// or `p` here, so the matrix is a permutation of order `p-1`).
pub(crate) fn mod_q1_support(p: usize, r: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..p).map(move |a| (a, (r * a) % p))
}
