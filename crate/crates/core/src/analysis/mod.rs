//! Girth, short-cycle censuses, distances, and density verification for
//! sparse binary parity-check matrices.
//!
//! The searches are exact and deterministic: parallel runs reduce with
//! associative, order-insensitive operations, so results are identical with
//! and without the `parallel` feature.

mod cycles;
mod distance;
mod girth;

pub use cycles::{
    census, census_window, collect_cycles, count_cycles, cycle_r_labels, CycleCensus,
    DEFAULT_CYCLE_BUDGET, MAX_CYCLE_LEN,
};
pub use distance::{column_distance, free_distance, CodewordWitness, FreeDistanceBounds};
pub use girth::{girth, girth_stabilized, validate_cycle, GirthReport, StartRegion};

use crate::convcodes::{ConstructionSpec, ConvError, Family, SlidingWindow};
use crate::gf2sparse::Density;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Construction(#[from] ConvError),
    #[error("window size cap reached at s = {window_s} before the girth stabilized (last value {last_girth:?})")]
    CapBeforeStabilization {
        window_s: usize,
        last_girth: Option<usize>,
    },
    #[error("cycle search budget exhausted at start column {root}")]
    BudgetExceeded { root: usize },
    #[error("cycle length {0} out of range (even, 4..=12)")]
    BadCycleLength(usize),
    #[error("positions do not form a valid alternating cycle of the matrix")]
    InvalidCycle,
    #[error("cycle column {col} carries no slope label")]
    UnlabeledColumn { col: usize },
    #[error("matrix carries no construction parameters")]
    MissingOrigin,
    #[error(
        "distance search would evaluate ~{0} column subsets; raise caps deliberately if intended"
    )]
    SearchTooLarge(u128),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// Popcount density against the closed-form density of the named family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub measured: Density,
    pub formula: Density,
    pub matches: bool,
}

/// Compare the measured density of a materialized window with the family's
/// closed form. All four constructions have `mu + 2` nonzeros per systematic
/// column group of each time step, giving
/// `(mu+2) / (2 * (n-k) * (mu_eff + s + 1))` with the family's own `n - k`.
pub fn density_check(w: &SlidingWindow) -> Result<DensityCheck, AnalysisError> {
    let origin = w.origin.ok_or(AnalysisError::MissingOrigin)?;
    let (p, mu, s) = (origin.p as u128, origin.mu as u128, w.s as u128);
    let pow = |e: usize| (p).pow(e as u32);
    let formula = match origin.family {
        Family::Tv => Density::new(mu + 2, 2 * pow(origin.m + 1) * (mu + s + 1)),
        Family::TvTilde => Density::new(mu + 2, 2 * pow(origin.m + 2) * (mu + s + 1)),
        Family::TiPrime => Density::new(mu + 2, 2 * (p - 1) * (mu + s + 1)),
        // One wrapped step covers a full period: n-k = (p-1)p^{m+1}, and the
        // band has memory 1, so the time factor is s + 2.
        Family::TiHat => Density::new(mu + 2, 2 * (p - 1) * pow(origin.m + 1) * (s + 2)),
    };
    let measured = w.matrix.density();
    Ok(DensityCheck {
        matches: measured == formula,
        measured,
        formula,
    })
}

/// Free-distance bounds as they appear in JSON reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DFreeBounds {
    pub lo: usize,
    pub hi: Option<usize>,
}

/// The machine-readable result of an analysis run. Every section is
/// optional; a run fills in what was requested.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<ConstructionSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_s: Option<usize>,
    /// `None` means no cycle was found in the window.
    pub girth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilized: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census: Option<BTreeMap<usize, u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distances: Option<BTreeMap<usize, usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_free: Option<DFreeBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityCheck>,
}
