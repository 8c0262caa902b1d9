//! LDPC codes from orthogonal Latin squares: constructions, structural
//! analysis, and a small belief-propagation simulation harness.
//!
//! The crate is organised around one sparse GF(2) matrix type and a family
//! of code constructions built on top of it:
//!
//! * [`gf2sparse`] — sparse binary matrices, block layout bookkeeping,
//!   exact density arithmetic, and alist file I/O.
//! * [`latin`] — the Latin squares `L_r(a,b) = b - r(a-1) mod p` and their
//!   (modified) incidence matrices.
//! * [`convcodes`] — time-varying and time-invariant LDPC convolutional
//!   code families, lifting, and sliding-window materialization.
//! * [`blockcodes`] — the combinatorial-design block-code pipeline and its
//!   cycle-elimination lifting steps.
//! * [`analysis`] — girth, cycle censuses, column/free distances, density
//!   checks, and JSON reports.
//! * [`simulate`] — BSC transmission, sum-product decoding, Monte Carlo.
//!
//! With the default `parallel` feature the heavy kernels (girth scans,
//! cycle counting, per-phase distances, Monte Carlo frames) distribute
//! over rayon; without it they run sequentially with identical results.

pub mod analysis;
pub mod blockcodes;
pub mod convcodes;
pub mod gf2sparse;
pub mod latin;
mod par;
pub mod simulate;
