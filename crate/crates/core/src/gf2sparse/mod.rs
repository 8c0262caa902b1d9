//! Sparse GF(2) matrices stored as row-major adjacency lists.
//!
//! All structural work in this crate (window assembly, girth scans, cycle
//! counting, distance searches) runs over [`SparseBinaryMatrix`], which keeps
//! one sorted list of column indices per row and derives a column view on
//! demand. Indices are 0-based throughout; the constructions that are stated
//! in 1-based terms document their index maps at the call site.

mod alist;

pub use alist::{read_alist, read_alist_path, write_alist, write_alist_path, AlistError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("entry ({row}, {col}) out of bounds for a {n_rows}x{n_cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("block at ({row}, {col}) is {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    BlockShapeMismatch {
        row: usize,
        col: usize,
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error(
        "matrix dimensions {n_rows}x{n_cols} are not divisible into {block_size}-sized blocks"
    )]
    BadBlockLayout {
        n_rows: usize,
        n_cols: usize,
        block_size: usize,
    },
}

/// Sparse binary matrix over GF(2).
///
/// Rows own sorted, duplicate-free column indices. Column indices are `u32`;
/// every matrix this crate builds stays far below that bound (materialization
/// enforces an explicit nonzero cap first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<u32>>,
    nnz: usize,
}

impl SparseBinaryMatrix {
    pub fn zero(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            rows: vec![Vec::new(); n_rows],
            nnz: 0,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            rows: (0..n as u32).map(|i| vec![i]).collect(),
            nnz: n,
        }
    }

    /// Build from `(row, col)` triples in any order. Duplicates are rejected
    /// rather than folded, so accidental double emission in a construction
    /// surfaces as an error instead of a silently thinner matrix.
    pub fn from_triples<I>(n_rows: usize, n_cols: usize, triples: I) -> Result<Self, Gf2Error>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n_rows];
        let mut nnz = 0usize;
        for (r, c) in triples {
            if r >= n_rows || c >= n_cols {
                return Err(Gf2Error::OutOfBounds {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
            rows[r].push(c as u32);
            nnz += 1;
        }
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(Gf2Error::DuplicateEntry {
                    row: r,
                    col: w[0] as usize,
                });
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            rows,
            nnz,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(
            row < self.n_rows && col < self.n_cols,
            "index out of bounds"
        );
        self.rows[row].binary_search(&(col as u32)).is_ok()
    }

    /// Sorted column indices of one row.
    pub fn row(&self, row: usize) -> &[u32] {
        &self.rows[row]
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, cols)| cols.iter().map(move |&c| (r, c as usize)))
    }

    /// Column view: sorted row indices per column, computed on demand.
    pub fn col_view(&self) -> Vec<Vec<u32>> {
        let mut cols: Vec<Vec<u32>> = vec![Vec::new(); self.n_cols];
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                cols[c as usize].push(r as u32);
            }
        }
        // Row-major traversal pushes in increasing row order already.
        cols
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0usize; self.n_cols];
        for row in &self.rows {
            for &c in row {
                w[c as usize] += 1;
            }
        }
        w
    }

    pub fn max_row_weight(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_col_weight(&self) -> usize {
        self.col_weights().into_iter().max().unwrap_or(0)
    }

    pub fn transpose(&self) -> Self {
        let cols = self.col_view();
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            rows: cols,
            nnz: self.nnz,
        }
    }

    /// True when every row and every column carries exactly one 1.
    pub fn is_permutation(&self) -> bool {
        self.n_rows == self.n_cols
            && self.rows.iter().all(|r| r.len() == 1)
            && self.col_weights().iter().all(|&w| w == 1)
    }

    /// Fraction of ones, as an exact ratio.
    pub fn density(&self) -> Density {
        Density::new(self.nnz as u128, self.n_rows as u128 * self.n_cols as u128)
    }

    /// Syndrome `H x` over GF(2); `x` entries are 0/1.
    pub fn mul_vec(&self, x: &[u8]) -> Vec<u8> {
        assert_eq!(x.len(), self.n_cols, "vector length mismatch");
        self.rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (x[c as usize] & 1)))
            .collect()
    }

    /// Copy of the rows in `range`, keeping the full column span.
    pub fn row_submatrix(&self, range: std::ops::Range<usize>) -> Self {
        assert!(range.end <= self.n_rows, "row range out of bounds");
        let rows: Vec<Vec<u32>> = self.rows[range.clone()].to_vec();
        let nnz = rows.iter().map(Vec::len).sum();
        Self {
            n_rows: range.len(),
            n_cols: self.n_cols,
            rows,
            nnz,
        }
    }

    /// Replace each 1 at `(r, c)` with the `block_rows x block_cols` block
    /// chosen by `rule(r, c)` (`None` places a zero block), and each 0 with a
    /// zero block. The plain Kronecker product `A (x) B` is the special case
    /// `rule = |_, _| Some(&B)`.
    pub fn kronecker_expand<'b, F>(
        &self,
        block_rows: usize,
        block_cols: usize,
        mut rule: F,
    ) -> Result<Self, Gf2Error>
    where
        F: FnMut(usize, usize) -> Option<&'b SparseBinaryMatrix>,
    {
        let mut triples: Vec<(usize, usize)> = Vec::new();
        for (r, c) in self.iter_ones() {
            let Some(block) = rule(r, c) else { continue };
            if block.n_rows != block_rows || block.n_cols != block_cols {
                return Err(Gf2Error::BlockShapeMismatch {
                    row: r,
                    col: c,
                    got_rows: block.n_rows,
                    got_cols: block.n_cols,
                    want_rows: block_rows,
                    want_cols: block_cols,
                });
            }
            let (or, oc) = (r * block_rows, c * block_cols);
            triples.extend(block.iter_ones().map(|(br, bc)| (or + br, oc + bc)));
        }
        Self::from_triples(self.n_rows * block_rows, self.n_cols * block_cols, triples)
    }
}

/// Power of the cyclic-shift permutation: `P^e` of a given order has its 1 in
/// row `r` at column `(r + e) mod order` (the identity with columns shifted
/// `e` positions to the right).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PermutationPower {
    pub order: usize,
    pub exponent: usize,
}

impl PermutationPower {
    pub fn new(order: usize, exponent: usize) -> Self {
        assert!(order > 0, "permutation order must be positive");
        Self {
            order,
            exponent: exponent % order,
        }
    }

    pub fn to_matrix(self) -> SparseBinaryMatrix {
        let n = self.order;
        let rows = (0..n)
            .map(|r| vec![((r + self.exponent) % n) as u32])
            .collect();
        SparseBinaryMatrix {
            n_rows: n,
            n_cols: n,
            rows,
            nnz: n,
        }
    }
}

/// Partition of a matrix into square `block_size` cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub block_size: usize,
    pub block_rows: usize,
    pub block_cols: usize,
}

impl BlockLayout {
    pub fn new(n_rows: usize, n_cols: usize, block_size: usize) -> Result<Self, Gf2Error> {
        if block_size == 0
            || !n_rows.is_multiple_of(block_size)
            || !n_cols.is_multiple_of(block_size)
        {
            return Err(Gf2Error::BadBlockLayout {
                n_rows,
                n_cols,
                block_size,
            });
        }
        Ok(Self {
            block_size,
            block_rows: n_rows / block_size,
            block_cols: n_cols / block_size,
        })
    }

    pub fn block_of_row(&self, row: usize) -> usize {
        row / self.block_size
    }

    pub fn block_of_col(&self, col: usize) -> usize {
        col / self.block_size
    }
}

/// Exact fraction, stored reduced. Used for density bookkeeping so closed
/// forms can be compared without floating-point slack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Density {
    num: u128,
    den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Density {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0, "density denominator must be positive");
        let g = gcd(num, den).max(1);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn denominator(&self) -> u128 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}
