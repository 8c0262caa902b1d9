//! Exhaustive enumeration of short cycles.
//!
//! A cycle of length `2l` alternates `l` distinct columns and `l` distinct
//! rows. The walk is rooted at its smallest start-region column and oriented
//! so the first row is smaller than the last, which makes every cycle count
//! exactly once and lets start columns be searched independently — the
//! counts reduce by plain addition, so parallel and sequential runs agree.

use super::girth::canonical_rotation;
use super::{validate_cycle, AnalysisError, StartRegion};
use crate::convcodes::{materialize, ConstructionSpec, SlidingWindow};
use crate::gf2sparse::SparseBinaryMatrix;
use crate::par::map_reduce_with;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default total step budget for one enumeration call, split evenly across
/// start columns.
pub const DEFAULT_CYCLE_BUDGET: u64 = 1_000_000_000;

/// Floor for any single start column's share of the budget, so tiny budgets
/// over many roots still make progress.
const MIN_ROOT_BUDGET: u64 = 1 << 16;

pub const MAX_CYCLE_LEN: usize = 12;

/// Cycle counts by length, with the window provenance when counted on a
/// materialized band.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCensus {
    /// Count for every even length scanned, zeros included.
    pub counts: BTreeMap<usize, u64>,
    pub window_s: Option<usize>,
    pub restricted_to_first_period: bool,
}

/// Depth-first walk state for one start column.
struct Walker<'a> {
    h: &'a SparseBinaryMatrix,
    col_adj: &'a [Vec<u32>],
    region: &'a StartRegion,
    c0: u32,
    max_ell: usize,
    collect_ell: Option<usize>,
    cols: Vec<u32>,
    rows: Vec<u32>,
    counts: Vec<u64>,
    found: Vec<Vec<(usize, usize)>>,
    budget: u64,
}

impl Walker<'_> {
    fn spend(&mut self) -> Result<(), ()> {
        self.budget = self.budget.checked_sub(1).ok_or(())?;
        Ok(())
    }

    /// Extend the walk from column `c`; `rows` holds the rows used so far.
    fn step_col(&mut self, c: u32) -> Result<(), ()> {
        self.spend()?;
        let close_ell = self.rows.len() + 1;
        let at_limit = close_ell == self.max_ell;
        let root_adj = &self.col_adj[self.c0 as usize];
        for idx in 0..self.col_adj[c as usize].len() {
            let r = self.col_adj[c as usize][idx];
            if self.rows.contains(&r) {
                continue;
            }
            // Closing the walk back to the root counts one cycle; the
            // orientation gate picks one of the two traversal directions.
            if close_ell >= 2 && self.rows[0] < r && root_adj.binary_search(&r).is_ok() {
                self.record(r);
            }
            if !at_limit {
                self.rows.push(r);
                self.step_row(r)?;
                self.rows.pop();
            }
        }
        Ok(())
    }

    fn step_row(&mut self, r: u32) -> Result<(), ()> {
        self.spend()?;
        for idx in 0..self.h.row(r as usize).len() {
            let c = self.h.row(r as usize)[idx];
            if c == self.c0 || self.cols.contains(&c) {
                continue;
            }
            // The root must be the smallest region column on the cycle.
            if c < self.c0 && self.region.contains(c as usize) {
                continue;
            }
            self.cols.push(c);
            self.step_col(c)?;
            self.cols.pop();
        }
        Ok(())
    }

    fn record(&mut self, closing_row: u32) {
        let ell = self.rows.len() + 1;
        self.counts[ell] += 1;
        if self.collect_ell == Some(ell) {
            let mut pos = Vec::with_capacity(2 * ell);
            for i in 0..ell {
                let r = if i + 1 == ell {
                    closing_row
                } else {
                    self.rows[i]
                };
                pos.push((r as usize, self.cols[i] as usize));
                pos.push((r as usize, self.cols[(i + 1) % ell] as usize));
            }
            self.found.push(canonical_rotation(pos));
        }
    }
}

/// Per-root payload: counts indexed by half-length, plus collected cycles.
type RootYield = (Vec<u64>, Vec<Vec<(usize, usize)>>);

fn enumerate(
    h: &SparseBinaryMatrix,
    region: &StartRegion,
    max_ell: usize,
    collect_ell: Option<usize>,
    budget: u64,
) -> Result<RootYield, AnalysisError> {
    let mut col_adj = vec![Vec::new(); h.n_cols()];
    for (r, c) in h.iter_ones() {
        col_adj[c].push(r as u32);
    }
    let roots = region.roots(h.n_cols());
    let n_roots = roots.len();
    if n_roots == 0 {
        return Ok((vec![0; max_ell + 1], Vec::new()));
    }
    let per_root = (budget / n_roots as u64).max(MIN_ROOT_BUDGET);
    let zero: Result<RootYield, usize> = Ok((vec![0; max_ell + 1], Vec::new()));
    let merged = map_reduce_with(
        n_roots,
        || (),
        |_, i| {
            let c0 = (roots.start + i) as u32;
            let mut w = Walker {
                h,
                col_adj: &col_adj,
                region,
                c0,
                max_ell,
                collect_ell,
                cols: vec![c0],
                rows: Vec::with_capacity(max_ell),
                counts: vec![0; max_ell + 1],
                found: Vec::new(),
                budget: per_root,
            };
            match w.step_col(c0) {
                Ok(()) => Ok((w.counts, w.found)),
                Err(()) => Err(c0 as usize),
            }
        },
        zero,
        |a, b| match (a, b) {
            (Err(x), Err(y)) => Err(x.min(y)),
            (Err(x), Ok(_)) | (Ok(_), Err(x)) => Err(x),
            (Ok((ca, mut fa)), Ok((cb, fb))) => {
                let sums = ca.iter().zip(&cb).map(|(x, y)| x + y).collect();
                fa.extend(fb);
                Ok((sums, fa))
            }
        },
    );
    match merged {
        Ok((counts, mut found)) => {
            found.sort_unstable();
            Ok((counts, found))
        }
        Err(root) => Err(AnalysisError::BudgetExceeded { root }),
    }
}

fn half_len(length: usize) -> Result<usize, AnalysisError> {
    if length < 4 || !length.is_multiple_of(2) || length > MAX_CYCLE_LEN {
        return Err(AnalysisError::BadCycleLength(length));
    }
    Ok(length / 2)
}

/// Number of cycles of exactly `length` through at least one region column.
pub fn count_cycles(
    h: &SparseBinaryMatrix,
    length: usize,
    region: &StartRegion,
    budget: u64,
) -> Result<u64, AnalysisError> {
    let ell = half_len(length)?;
    let (counts, _) = enumerate(h, region, ell, None, budget)?;
    Ok(counts[ell])
}

/// All cycles of exactly `length` through the region, each in canonical
/// position order, sorted.
pub fn collect_cycles(
    h: &SparseBinaryMatrix,
    length: usize,
    region: &StartRegion,
    budget: u64,
) -> Result<Vec<Vec<(usize, usize)>>, AnalysisError> {
    let ell = half_len(length)?;
    let (_, found) = enumerate(h, region, ell, Some(ell), budget)?;
    Ok(found)
}

/// Counts for every even length `4..=max_len` in one pass.
pub fn census(
    h: &SparseBinaryMatrix,
    max_len: usize,
    region: &StartRegion,
    budget: u64,
) -> Result<CycleCensus, AnalysisError> {
    let max_ell = half_len(max_len)?;
    let (counts, _) = enumerate(h, region, max_ell, None, budget)?;
    Ok(CycleCensus {
        counts: (2..=max_ell).map(|e| (2 * e, counts[e])).collect(),
        window_s: None,
        restricted_to_first_period: false,
    })
}

/// Census of a family's window `H_[0,s]`, restricted to start columns in the
/// first period (which sees every cycle class of the band).
pub fn census_window(
    spec: ConstructionSpec,
    s: usize,
    max_len: usize,
    budget: u64,
) -> Result<CycleCensus, AnalysisError> {
    let family = spec.build()?;
    let w = materialize(&family, s)?;
    let mut c = census(
        &w.matrix,
        max_len,
        &StartRegion::Cols(w.first_period_cols()),
        budget,
    )?;
    c.window_s = Some(s);
    c.restricted_to_first_period = true;
    Ok(c)
}

/// Slope labels of the block columns a cycle passes through, in cycle
/// order. Only systematic columns can lie on cycles (identity columns have
/// a single nonzero), so every visited column carries a label when the
/// window's family assigns one slope per time step.
pub fn cycle_r_labels(
    w: &SlidingWindow,
    positions: &[(usize, usize)],
) -> Result<Vec<usize>, AnalysisError> {
    if !validate_cycle(&w.matrix, positions) {
        return Err(AnalysisError::InvalidCycle);
    }
    let mut cols: Vec<usize> = Vec::with_capacity(positions.len() / 2);
    for &(_, c) in positions {
        if cols.last() != Some(&c) {
            cols.push(c);
        }
    }
    if cols.len() > 1 && cols.first() == cols.last() {
        cols.pop();
    }
    cols.into_iter()
        .map(|c| {
            w.slope_of_col(c)
                .ok_or(AnalysisError::UnlabeledColumn { col: c })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convcodes::{build_base_family, materialize, ConstructionSpec, Family};
    use proptest::prelude::*;

    fn all_ones(n: usize) -> SparseBinaryMatrix {
        let triples = (0..n).flat_map(|r| (0..n).map(move |c| (r, c)));
        SparseBinaryMatrix::from_triples(n, n, triples).unwrap()
    }

    /// Complete bipartite counts: cycles of length 2k choose k rows and k
    /// columns and interleave them, `C(n,k)^2 * k! (k-1)! / 2`.
    #[test]
    fn complete_bipartite_counts() {
        let h = all_ones(3);
        let b = DEFAULT_CYCLE_BUDGET;
        assert_eq!(count_cycles(&h, 4, &StartRegion::All, b).unwrap(), 9);
        assert_eq!(count_cycles(&h, 6, &StartRegion::All, b).unwrap(), 6);
        let h4 = all_ones(4);
        assert_eq!(count_cycles(&h4, 4, &StartRegion::All, b).unwrap(), 36);
        assert_eq!(count_cycles(&h4, 6, &StartRegion::All, b).unwrap(), 96);
        assert_eq!(count_cycles(&h4, 8, &StartRegion::All, b).unwrap(), 72);
    }

    #[test]
    fn identity_has_no_cycles() {
        let h = SparseBinaryMatrix::identity(7);
        for len in [4, 6, 8] {
            assert_eq!(
                count_cycles(&h, len, &StartRegion::All, DEFAULT_CYCLE_BUDGET).unwrap(),
                0
            );
        }
    }

    #[test]
    fn collect_matches_count_and_validates() {
        let h = all_ones(3);
        for len in [4usize, 6] {
            let n = count_cycles(&h, len, &StartRegion::All, DEFAULT_CYCLE_BUDGET).unwrap();
            let cycles = collect_cycles(&h, len, &StartRegion::All, DEFAULT_CYCLE_BUDGET).unwrap();
            assert_eq!(cycles.len() as u64, n);
            let mut dedup = cycles.clone();
            dedup.dedup();
            assert_eq!(dedup.len(), cycles.len(), "duplicate cycle reported");
            for c in &cycles {
                assert_eq!(c.len(), len);
                assert!(validate_cycle(&h, c));
            }
        }
    }

    #[test]
    fn census_spans_all_lengths() {
        let c = census(&all_ones(3), 8, &StartRegion::All, DEFAULT_CYCLE_BUDGET).unwrap();
        assert_eq!(c.counts.get(&4), Some(&9));
        assert_eq!(c.counts.get(&6), Some(&6));
        assert_eq!(c.counts.get(&8), Some(&0));
        assert!(!c.restricted_to_first_period);
    }

    #[test]
    fn region_counts_only_touching_cycles() {
        // Two disjoint 4-cycles: {r0,r1}x{c0,c1} and {r2,r3}x{c2,c3}.
        let h = SparseBinaryMatrix::from_triples(
            4,
            4,
            vec![
                (0, 0),
                (0, 1),
                (1, 0),
                (1, 1),
                (2, 2),
                (2, 3),
                (3, 2),
                (3, 3),
            ],
        )
        .unwrap();
        let b = DEFAULT_CYCLE_BUDGET;
        assert_eq!(count_cycles(&h, 4, &StartRegion::All, b).unwrap(), 2);
        assert_eq!(count_cycles(&h, 4, &StartRegion::Cols(0..2), b).unwrap(), 1);
        assert_eq!(count_cycles(&h, 4, &StartRegion::Cols(2..4), b).unwrap(), 1);
        // A region column inside the cycle that is not the smallest one
        // still finds it exactly once.
        assert_eq!(count_cycles(&h, 4, &StartRegion::Cols(1..3), b).unwrap(), 2);
    }

    #[test]
    fn budget_exhaustion_names_first_starving_root() {
        let h = all_ones(8);
        let err = count_cycles(&h, 12, &StartRegion::All, 1).unwrap_err();
        match err {
            AnalysisError::BudgetExceeded { root } => assert_eq!(root, 0),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn labels_follow_block_column_slopes() {
        let fam = build_base_family(5, 3).unwrap();
        let w = materialize(&fam, 8).unwrap();
        let cycles = collect_cycles(
            &w.matrix,
            6,
            &StartRegion::Cols(w.first_period_cols()),
            DEFAULT_CYCLE_BUDGET,
        )
        .unwrap();
        assert!(!cycles.is_empty());
        for cyc in &cycles {
            let labels = cycle_r_labels(&w, cyc).unwrap();
            assert_eq!(labels.len(), 3);
            assert!(labels.iter().all(|&r| (1..=4).contains(&r)));
            // Only systematic columns can sit on cycles, and each label is
            // its block column's slope.
            let mut cols: Vec<usize> = Vec::new();
            for &(_, c) in cyc {
                assert!(c % w.n < w.k, "identity column {c} on a cycle");
                if cols.last() != Some(&c) {
                    cols.push(c);
                }
            }
            if cols.first() == cols.last() {
                cols.pop();
            }
            let expect: Vec<usize> = cols.iter().map(|&c| ((c / w.n) % w.period) + 1).collect();
            assert_eq!(labels, expect);
        }
    }

    #[test]
    fn labels_reject_bad_input() {
        let fam = build_base_family(5, 3).unwrap();
        let w = materialize(&fam, 8).unwrap();
        assert!(matches!(
            cycle_r_labels(&w, &[(0, 0), (0, 1), (1, 1)]),
            Err(AnalysisError::InvalidCycle)
        ));
        let spec = ConstructionSpec::new(Family::TiPrime, 5, 2, 0).unwrap();
        let wp = materialize(&spec.build().unwrap(), 6).unwrap();
        let cyc = collect_cycles(&wp.matrix, 6, &StartRegion::All, DEFAULT_CYCLE_BUDGET).unwrap();
        if let Some(first) = cyc.first() {
            assert!(matches!(
                cycle_r_labels(&wp, first),
                Err(AnalysisError::UnlabeledColumn { .. })
            ));
        }
    }

    #[test]
    fn bad_lengths_are_rejected() {
        let h = all_ones(2);
        for len in [0usize, 2, 5, 14] {
            assert!(matches!(
                count_cycles(&h, len, &StartRegion::All, DEFAULT_CYCLE_BUDGET),
                Err(AnalysisError::BadCycleLength(_))
            ));
        }
    }

    proptest! {
        /// 4-cycle counts match the closed form over shared column pairs.
        #[test]
        fn four_cycles_match_pair_formula(seed in 0u64..300) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (nr, nc) = (rng.random_range(2..8usize), rng.random_range(2..8usize));
            let mut triples = Vec::new();
            for r in 0..nr {
                for c in 0..nc {
                    if rng.random_bool(0.4) {
                        triples.push((r, c));
                    }
                }
            }
            let h = SparseBinaryMatrix::from_triples(nr, nc, triples).unwrap();
            let mut expected = 0u64;
            for a in 0..nr {
                for b in a + 1..nr {
                    let shared = (0..nc)
                        .filter(|&c| h.get(a, c) && h.get(b, c))
                        .count() as u64;
                    expected += shared * (shared.saturating_sub(1)) / 2;
                }
            }
            let got = count_cycles(&h, 4, &StartRegion::All, DEFAULT_CYCLE_BUDGET).unwrap();
            prop_assert_eq!(got, expected);
        }
    }
}
