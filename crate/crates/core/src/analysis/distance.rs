//! Column distances and free-distance bounds.
//!
//! The `j`-th column distance is the least weight of a truncated codeword
//! with a nonzero first block, minimized over all starting phases. In
//! matrix terms: the smallest dependent column set of the truncated window
//! that touches the first block of columns. Searches run in increasing
//! weight with a meet-in-the-middle split, so the first hit is exact: a
//! colliding pair that overlapped would exhibit a smaller dependent set
//! already found at an earlier weight.

use super::AnalysisError;
use crate::convcodes::{encode_systematic, truncated_window, ConvFamily};
use crate::gf2sparse::SparseBinaryMatrix;
use crate::par::map_reduce_with;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Per-weight cap on enumerated column subsets; beyond this the search
/// refuses rather than run for hours.
const DISTANCE_WORK_CAP: u128 = 2_000_000_000;

/// One minimum-weight codeword exhibiting the upper bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodewordWitness {
    /// Phase of the first (nonzero) block.
    pub start_time: usize,
    /// Codeword blocks from `start_time` through the memory tail, `n` bits
    /// each.
    pub blocks: Vec<Vec<u8>>,
    pub weight: usize,
}

/// `lo <= d_free <= hi`; `certified` when the two meet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeDistanceBounds {
    pub lo: usize,
    pub hi: usize,
    pub witness: CodewordWitness,
    pub certified: bool,
}

/// Lexicographic k-subset enumerator over `0..n`.
struct Combinations {
    n: usize,
    k: usize,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            k,
            idx: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.idx);
        }
        let k = self.k;
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.idx[i] != i + self.n - k {
                break;
            }
        }
        self.idx[i] += 1;
        for j in i + 1..k {
            self.idx[j] = self.idx[j - 1] + 1;
        }
        Some(&self.idx)
    }
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - k + 1 + i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

fn col_masks(m: &SparseBinaryMatrix) -> Vec<Vec<u64>> {
    let words = m.n_rows().div_ceil(64);
    let mut out = vec![vec![0u64; words]; m.n_cols()];
    for (r, c) in m.iter_ones() {
        out[c][r / 64] |= 1 << (r % 64);
    }
    out
}

fn xor_into(acc: &mut [u64], v: &[u64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a ^= b;
    }
}

/// Is there a `(h1 + h2)`-subset of the columns other than `c0` whose XOR
/// equals column `c0`?
fn mitm_hit(masks: &[Vec<u64>], c0: usize, h1: usize, h2: usize) -> bool {
    let n_u = masks.len() - 1;
    let pick = |i: usize| &masks[if i < c0 { i } else { i + 1 }];
    let target = &masks[c0];
    let words = target.len();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut acc = vec![0u64; words];
    let mut left = Combinations::new(n_u, h1);
    while let Some(sel) = left.next() {
        acc.fill(0);
        for &i in sel {
            xor_into(&mut acc, pick(i));
        }
        seen.insert(acc.clone());
    }
    let mut right = Combinations::new(n_u, h2);
    while let Some(sel) = right.next() {
        acc.copy_from_slice(target);
        for &i in sel {
            xor_into(&mut acc, pick(i));
        }
        if seen.contains(&acc) {
            return true;
        }
    }
    false
}

/// Least dependent-set weight at one phase, or `None` if it exceeds
/// `w_max`. `n_first` start columns anchor the sets.
fn min_weight_at_phase(
    masks: &[Vec<u64>],
    n_first: usize,
    w_max: usize,
) -> Result<Option<usize>, AnalysisError> {
    for w in 2..=w_max.min(masks.len()) {
        let h = w - 1;
        let (h1, h2) = (h / 2, h - h / 2);
        let n_u = masks.len() - 1;
        let work = n_first as u128 * (binom(n_u, h1) + binom(n_u, h2));
        if work > DISTANCE_WORK_CAP {
            return Err(AnalysisError::SearchTooLarge(work));
        }
        let hit = map_reduce_with(
            n_first,
            || (),
            |_, c0| mitm_hit(masks, c0, h1, h2),
            false,
            |a, b| a || b,
        );
        if hit {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// The `j`-th column distance, or `None` when it exceeds `d_cap`.
pub fn column_distance(
    family: &ConvFamily,
    j: usize,
    d_cap: Option<usize>,
) -> Result<Option<usize>, AnalysisError> {
    let cap = d_cap.unwrap_or(usize::MAX);
    let mut best: Option<usize> = None;
    for t in 0..family.period() {
        let w_max = best.map_or(cap, |b| (b - 1).min(cap));
        if w_max < 2 {
            break;
        }
        let masks = col_masks(&truncated_window(family, t, j));
        if let Some(w) = min_weight_at_phase(&masks, family.n(), w_max)? {
            best = Some(w);
        }
    }
    Ok(best)
}

/// Bracket the free distance: `hi` from an exhaustive sweep of short, light
/// information sequences over every starting phase, `lo` from column
/// distances up to `j_max` (they grow toward the free distance). The sweep
/// covers spans up to `span_cap` blocks and information weight up to
/// `weight_cap`, which always includes the single-bit impulse, so `hi` is
/// attained by a concrete codeword.
pub fn free_distance(
    family: &ConvFamily,
    j_max: usize,
    weight_cap: usize,
    span_cap: usize,
) -> Result<FreeDistanceBounds, AnalysisError> {
    if weight_cap == 0 || span_cap == 0 {
        return Err(AnalysisError::BadParameter(
            "weight and span caps must be at least 1".into(),
        ));
    }
    let (k, mu, phases) = (family.k(), family.mu(), family.period());
    let mut hi = usize::MAX;
    let mut witness: Option<CodewordWitness> = None;
    for span in 1..=span_cap {
        let bits = span * k;
        for wu in 1..=weight_cap.min(bits) {
            if wu >= hi {
                break;
            }
            let work = binom(bits, wu) * phases as u128;
            if work > DISTANCE_WORK_CAP {
                return Err(AnalysisError::SearchTooLarge(work));
            }
            let mut comb = Combinations::new(bits, wu);
            while let Some(sel) = comb.next() {
                // Exact span: a bit in the first block and in the last.
                if sel[0] >= k || (span > 1 && sel[wu - 1] < (span - 1) * k) {
                    continue;
                }
                for t0 in 0..phases {
                    let mut info = vec![vec![0u8; k]; t0 + span + mu];
                    for &b in sel {
                        info[t0 + b / k][b % k] = 1;
                    }
                    let code = encode_systematic(family, &info)?;
                    let weight: usize = code
                        .iter()
                        .flat_map(|v| v.iter())
                        .map(|&x| x as usize)
                        .sum();
                    if weight < hi {
                        hi = weight;
                        witness = Some(CodewordWitness {
                            start_time: t0,
                            blocks: code[t0..].to_vec(),
                            weight,
                        });
                    }
                }
            }
        }
    }
    let witness = witness.expect("the impulse candidate is always swept");
    let mut lo = 0;
    let mut certified = false;
    for j in 0..=j_max {
        if let Some(d) = column_distance(family, j, Some(hi))? {
            lo = lo.max(d);
        }
        if lo == hi {
            certified = true;
            break;
        }
    }
    Ok(FreeDistanceBounds {
        lo,
        hi,
        witness,
        certified,
    })
}
