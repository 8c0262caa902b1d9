//! Demonstration plumbing: binary symmetric channel, log-domain
//! sum-product decoding over a parity-check matrix, and seeded Monte Carlo
//! error-rate sweeps.
//!
//! Reproducibility contract: every random draw comes from ChaCha8 seeded
//! with the run seed, with one stream pair per (point, frame) — noise on
//! even streams, info bits on odd ones — so results are identical across
//! schedules, platforms, and the `parallel` feature.

use crate::convcodes::{encode_systematic, ConvError, ConvFamily};
use crate::gf2sparse::SparseBinaryMatrix;
use crate::par::map_reduce_with;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

/// Message magnitude bound; also the saturated channel value for extreme
/// crossover probabilities.
pub const LLR_CLAMP: f64 = 25.0;

#[derive(Clone, Debug, Error)]
pub enum SimError {
    #[error("crossover probability {0} outside [0, 0.5)")]
    BadCrossover(f64),
    #[error("window has {cols} columns, family emits blocks of {n}")]
    SourceMismatch { cols: usize, n: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Encode(#[from] ConvError),
}

/// Binary symmetric channel with a reproducible flip source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub crossover: f64,
    pub seed: u64,
}

impl ChannelModel {
    fn validate(&self) -> Result<(), SimError> {
        if !(0.0..0.5).contains(&self.crossover) {
            return Err(SimError::BadCrossover(self.crossover));
        }
        Ok(())
    }
}

/// Channel log-likelihood magnitude `ln((1-p)/p)`, saturated at the message
/// clamp so `p = 0` stays finite.
pub fn bsc_llr(crossover: f64) -> f64 {
    if crossover <= 0.0 {
        return LLR_CLAMP;
    }
    (((1.0 - crossover) / crossover).ln()).min(LLR_CLAMP)
}

/// Flip each bit independently with the channel's crossover probability.
/// `frame` selects the noise stream, so repeating a frame repeats its flips
/// exactly (two transmissions of the same frame cancel).
pub fn transmit(codeword: &[u8], channel: &ChannelModel, frame: u64) -> Result<Vec<u8>, SimError> {
    channel.validate()?;
    let mut rng = noise_rng(channel.seed, 2 * frame);
    Ok(codeword
        .iter()
        .map(|&b| b ^ u8::from(rng.random_bool(channel.crossover)))
        .collect())
}

fn noise_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Hard-decision output of the decoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    pub decoded: Vec<u8>,
    pub iterations: usize,
    pub syndrome_zero: bool,
}

/// Flooding sum-product in the log domain. Messages are clamped to
/// [`LLR_CLAMP`] (an exactly certain check message would otherwise be
/// infinite); decoding stops at the first zero syndrome.
pub fn bp_decode(
    h: &SparseBinaryMatrix,
    received: &[u8],
    llr_magnitude: f64,
    max_iters: usize,
) -> DecodeResult {
    assert!(max_iters >= 1, "at least one iteration");
    assert!(
        llr_magnitude.is_finite() && llr_magnitude > 0.0,
        "channel magnitude must be positive and finite"
    );
    assert_eq!(received.len(), h.n_cols(), "received length mismatch");
    let clamp = |x: f64| x.clamp(-LLR_CLAMP, LLR_CLAMP);
    let channel: Vec<f64> = received
        .iter()
        .map(|&b| {
            if b == 0 {
                llr_magnitude
            } else {
                -llr_magnitude
            }
        })
        .collect();
    // Variable-to-check and check-to-variable messages, row-major by edge.
    let mut to_check: Vec<Vec<f64>> = (0..h.n_rows())
        .map(|r| h.row(r).iter().map(|&c| channel[c as usize]).collect())
        .collect();
    let mut to_var: Vec<Vec<f64>> = (0..h.n_rows()).map(|r| vec![0.0; h.row(r).len()]).collect();
    let mut decoded = received.to_vec();
    for it in 1..=max_iters {
        for (ms, outs) in to_check.iter().zip(&mut to_var) {
            let tanhs: Vec<f64> = ms.iter().map(|&x| (x / 2.0).tanh()).collect();
            for (i, out) in outs.iter_mut().enumerate() {
                let mut prod = 1.0;
                for (jj, &t) in tanhs.iter().enumerate() {
                    if jj != i {
                        prod *= t;
                    }
                }
                *out = clamp(2.0 * prod.atanh());
            }
        }
        let mut total = channel.clone();
        for (r, tv) in to_var.iter().enumerate() {
            for (&c, &e) in h.row(r).iter().zip(tv) {
                total[c as usize] += e;
            }
        }
        for (c, &l) in total.iter().enumerate() {
            decoded[c] = u8::from(l < 0.0);
        }
        if h.mul_vec(&decoded).iter().all(|&s| s == 0) {
            return DecodeResult {
                decoded,
                iterations: it,
                syndrome_zero: true,
            };
        }
        for (r, (tc, tv)) in to_check.iter_mut().zip(&to_var).enumerate() {
            for ((m, &c), &e) in tc.iter_mut().zip(h.row(r)).zip(tv) {
                *m = clamp(total[c as usize] - e);
            }
        }
    }
    DecodeResult {
        decoded,
        iterations: max_iters,
        syndrome_zero: false,
    }
}

/// What codewords a sweep transmits.
#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    /// The all-zero codeword; valid for error-rate estimates by linearity
    /// and channel symmetry.
    AllZero,
    /// Random information blocks (zero-tailed so the word lies in the
    /// window's kernel), drawn from the frame's info stream.
    RandomCodeword { family: &'a ConvFamily },
}

#[derive(Clone, Copy, Debug)]
pub struct MonteCarloConfig<'a> {
    pub h: &'a SparseBinaryMatrix,
    pub source: Source<'a>,
    pub crossovers: &'a [f64],
    pub frames: u64,
    pub seed: u64,
    pub max_iters: usize,
}

/// Tallies for one channel point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub crossover: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub avg_iters: f64,
}

fn frame_codeword(
    source: &Source,
    h: &SparseBinaryMatrix,
    seed: u64,
    stream: u64,
) -> Result<Vec<u8>, SimError> {
    match source {
        Source::AllZero => Ok(vec![0; h.n_cols()]),
        Source::RandomCodeword { family } => {
            let n = family.n();
            if n == 0 || !h.n_cols().is_multiple_of(n) {
                return Err(SimError::SourceMismatch {
                    cols: h.n_cols(),
                    n,
                });
            }
            let blocks = h.n_cols() / n;
            let tail = family.mu().min(blocks);
            let mut rng = noise_rng(seed, stream);
            let info: Vec<Vec<u8>> = (0..blocks)
                .map(|t| {
                    (0..family.k())
                        .map(|_| {
                            let bit = u8::from(rng.random_bool(0.5));
                            if t < blocks - tail {
                                bit
                            } else {
                                0
                            }
                        })
                        .collect()
                })
                .collect();
            Ok(encode_systematic(family, &info)?.concat())
        }
    }
}

/// Seeded sweep over the crossover grid: `frames` transmissions per point,
/// decoded against `h`. Identical configuration gives identical tallies on
/// any schedule.
pub fn monte_carlo(cfg: &MonteCarloConfig) -> Result<Vec<PointStats>, SimError> {
    if cfg.frames == 0 {
        return Err(SimError::BadParameter("frames must be at least 1".into()));
    }
    if cfg.max_iters == 0 {
        return Err(SimError::BadParameter(
            "max_iters must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(cfg.crossovers.len());
    for (pt, &crossover) in cfg.crossovers.iter().enumerate() {
        let channel = ChannelModel {
            crossover,
            seed: cfg.seed,
        };
        channel.validate()?;
        let llr = bsc_llr(crossover);
        let tally = map_reduce_with(
            cfg.frames as usize,
            || (),
            |_, f| {
                let frame = pt as u64 * cfg.frames + f as u64;
                let sent = frame_codeword(&cfg.source, cfg.h, cfg.seed, 2 * frame + 1)?;
                let received = transmit(&sent, &channel, frame)?;
                let res = bp_decode(cfg.h, &received, llr, cfg.max_iters);
                let bit_errs = res
                    .decoded
                    .iter()
                    .zip(&sent)
                    .filter(|(a, b)| a != b)
                    .count() as u64;
                Ok((bit_errs, u64::from(bit_errs > 0), res.iterations as u64))
            },
            Ok((0u64, 0u64, 0u64)),
            |a: Result<_, SimError>, b| match (a, b) {
                (Ok((x1, y1, z1)), Ok((x2, y2, z2))) => Ok((x1 + x2, y1 + y2, z1 + z2)),
                (Err(e), _) | (_, Err(e)) => Err(e),
            },
        )?;
        out.push(PointStats {
            crossover,
            frames: cfg.frames,
            bit_errors: tally.0,
            frame_errors: tally.1,
            avg_iters: tally.2 as f64 / cfg.frames as f64,
        });
    }
    Ok(out)
}

/// One row per channel point; floats print in shortest round-trip form so
/// equal runs produce byte-equal files.
pub fn write_csv<W: Write>(points: &[PointStats], mut w: W) -> io::Result<()> {
    writeln!(w, "crossover,frames,bit_errors,frame_errors,avg_iters")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.crossover, p.frames, p.bit_errors, p.frame_errors, p.avg_iters
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convcodes::{build_base_family, materialize};

    fn window_5_3(s: usize) -> SparseBinaryMatrix {
        materialize(&build_base_family(5, 3).unwrap(), s)
            .unwrap()
            .matrix
    }

    #[test]
    fn noiseless_channel_is_identity() {
        let ch = ChannelModel {
            crossover: 0.0,
            seed: 7,
        };
        let word = vec![1, 0, 1, 1, 0, 0, 1];
        assert_eq!(transmit(&word, &ch, 0).unwrap(), word);
    }

    #[test]
    fn crossover_range_is_enforced() {
        for bad in [0.5, 0.9, -0.1] {
            let ch = ChannelModel {
                crossover: bad,
                seed: 1,
            };
            assert!(matches!(
                transmit(&[0, 1], &ch, 0),
                Err(SimError::BadCrossover(_))
            ));
        }
    }

    #[test]
    fn same_frame_flips_cancel() {
        let ch = ChannelModel {
            crossover: 0.3,
            seed: 99,
        };
        let word: Vec<u8> = (0..512).map(|i| (i % 2) as u8).collect();
        let once = transmit(&word, &ch, 5).unwrap();
        assert_ne!(once, word);
        // Re-flipping with the same frame mask restores the input.
        let mask: Vec<u8> = once.iter().zip(&word).map(|(a, b)| a ^ b).collect();
        let zeroes = vec![0u8; word.len()];
        let mask_again: Vec<u8> = transmit(&zeroes, &ch, 5).unwrap();
        assert_eq!(mask, mask_again);
        let twice: Vec<u8> = once.iter().zip(&mask_again).map(|(a, b)| a ^ b).collect();
        assert_eq!(twice, word);
    }

    #[test]
    fn flip_counts_are_reproducible() {
        let ch = ChannelModel {
            crossover: 0.02,
            seed: 1234,
        };
        let word = vec![0u8; 1000];
        let a = transmit(&word, &ch, 0).unwrap();
        let b = transmit(&word, &ch, 0).unwrap();
        assert_eq!(a, b);
        let flips: usize = a.iter().map(|&x| x as usize).sum();
        assert!(flips > 0, "a 1000-bit frame at 2% should see flips");
        // A different frame uses a different stream.
        let c = transmit(&word, &ch, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn clean_word_decodes_in_one_iteration() {
        let h = window_5_3(6);
        let zero = vec![0u8; h.n_cols()];
        let res = bp_decode(&h, &zero, bsc_llr(0.02), 10);
        assert!(res.syndrome_zero);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.decoded, zero);
    }

    #[test]
    fn all_single_bit_errors_are_corrected() {
        let h = window_5_3(6);
        let llr = bsc_llr(0.02);
        for c in 0..h.n_cols() {
            let mut word = vec![0u8; h.n_cols()];
            word[c] = 1;
            let res = bp_decode(&h, &word, llr, 20);
            assert!(res.syndrome_zero, "column {c} not converged");
            assert!(
                res.decoded.iter().all(|&b| b == 0),
                "column {c} miscorrected"
            );
        }
    }

    #[test]
    fn syndrome_flag_matches_the_matrix() {
        let h = window_5_3(4);
        let ch = ChannelModel {
            crossover: 0.2,
            seed: 42,
        };
        for frame in 0..20u64 {
            let sent = vec![0u8; h.n_cols()];
            let recv = transmit(&sent, &ch, frame).unwrap();
            let res = bp_decode(&h, &recv, bsc_llr(0.2), 5);
            let synd_zero = h.mul_vec(&res.decoded).iter().all(|&s| s == 0);
            assert_eq!(res.syndrome_zero, synd_zero);
        }
    }

    #[test]
    fn extreme_llr_values_stay_finite() {
        let h = window_5_3(4);
        let word = vec![0u8; h.n_cols()];
        let res = bp_decode(&h, &word, bsc_llr(1e-12), 5);
        assert!(res.syndrome_zero);
        assert!(res.decoded.iter().all(|&b| b == 0));
    }

    #[test]
    fn monte_carlo_is_reproducible_and_clean_at_zero() {
        let h = window_5_3(6);
        let cfg = MonteCarloConfig {
            h: &h,
            source: Source::AllZero,
            crossovers: &[0.0, 0.02, 0.05],
            frames: 40,
            seed: 2024,
            max_iters: 15,
        };
        let a = monte_carlo(&cfg).unwrap();
        let b = monte_carlo(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].bit_errors, 0);
        assert_eq!(a[0].frame_errors, 0);
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_csv(&a, &mut csv_a).unwrap();
        write_csv(&b, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
        assert!(csv_a.starts_with(b"crossover,frames,bit_errors,frame_errors,avg_iters\n"));
    }

    #[test]
    fn random_codeword_source_transmits_kernel_words() {
        let fam = build_base_family(5, 3).unwrap();
        let w = materialize(&fam, 8).unwrap();
        let cfg = MonteCarloConfig {
            h: &w.matrix,
            source: Source::RandomCodeword { family: &fam },
            crossovers: &[0.0],
            frames: 25,
            seed: 5,
            max_iters: 10,
        };
        let stats = monte_carlo(&cfg).unwrap();
        // Noiseless transmissions of kernel words decode to themselves.
        assert_eq!(stats[0].bit_errors, 0);
        assert_eq!(stats[0].frame_errors, 0);
    }

    #[test]
    fn zero_frames_is_rejected() {
        let h = window_5_3(4);
        let cfg = MonteCarloConfig {
            h: &h,
            source: Source::AllZero,
            crossovers: &[0.01],
            frames: 0,
            seed: 1,
            max_iters: 5,
        };
        assert!(matches!(monte_carlo(&cfg), Err(SimError::BadParameter(_))));
    }
}
