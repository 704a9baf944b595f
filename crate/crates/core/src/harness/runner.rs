//! The Monte-Carlo experiment engine.
//!
//! Frames inside an SNR point are independent tasks: each derives its
//! own role-tagged RNG streams from `(seed, SNR index, frame index)`, so
//! a run is reproducible for any worker count. Frames are processed in
//! fixed-size batches and the stop rule is checked at batch boundaries,
//! which keeps the processed frame count itself deterministic.

use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{canonical_spa, lmmse_estimate, map_bruteforce, OracleLimits};
use crate::channel::{
    apply_channel, build_effective_channel, sample_paths, snr_to_noise_variance, EffectiveChannel,
    SpreadWindow,
};
use crate::constellation::Constellation;
use crate::detector::{detect_pruned, DetectorConfig, Kernel};
use crate::error::{Error, Result};
use crate::frame::{map_bits, vectorize, SymbolVector};
use crate::gram::{compute_gram, matched_filter, PrunedGram};

use super::config::{DetectorKind, SimConfig};
use super::results::{ResultTable, RunMeta, TrialRecord};
use super::seeds::{frame_rng, StreamRole};

/// Frames dispatched between stop-rule checks; fixed so the processed
/// frame count does not depend on the worker count.
const BATCH_FRAMES: u64 = 32;

/// One generated frame: transmitted patterns, channel and observation.
struct FrameInstance {
    tx_patterns: Vec<u16>,
    h: EffectiveChannel,
    y: SymbolVector,
}

fn make_frame(
    cfg: &SimConfig,
    c: &Constellation,
    snr_index: u64,
    frame_index: u64,
    noise_variance: f64,
) -> Result<FrameInstance> {
    let mut paths_rng = frame_rng(cfg.seed, StreamRole::Paths, snr_index, frame_index);
    let ps = sample_paths(
        &mut paths_rng,
        cfg.num_paths,
        cfg.l_max,
        cfg.k_max,
        cfg.fractional,
    )?;
    let h = build_effective_channel(&ps, cfg.n_doppler, cfg.m_delay, SpreadWindow::Full)?;

    let mut bits_rng = frame_rng(cfg.seed, StreamRole::Bits, snr_index, frame_index);
    let bit_count = cfg.n_doppler * cfg.m_delay * c.bits_per_symbol();
    let bits: Vec<u8> = (0..bit_count)
        .map(|_| rand::Rng::random_range(&mut bits_rng, 0..2u8))
        .collect();
    let frame = map_bits(&bits, c, cfg.n_doppler, cfg.m_delay)?;
    let x = vectorize(&frame);
    let tx_patterns = bits
        .chunks(c.bits_per_symbol())
        .map(|g| c.pattern_of_bits(g) as u16)
        .collect();

    let mut noise_rng = frame_rng(cfg.seed, StreamRole::Noise, snr_index, frame_index);
    let y = apply_channel(
        &h,
        &x,
        crate::channel::NoiseSpec::new(noise_variance)?,
        &mut noise_rng,
    )?;
    Ok(FrameInstance { tx_patterns, h, y })
}

/// Detector configuration for one SNR point: the log-sum-exp kernel
/// receives the point's noise variance.
fn point_detector_config(cfg: &SimConfig, noise_variance: f64) -> DetectorConfig {
    let mut det = cfg.detector;
    if let Kernel::LogSumExp { .. } = det.kernel {
        det.kernel = Kernel::LogSumExp { noise_variance };
    }
    det
}

fn bit_errors(tx: &[u16], rx: &[u16]) -> u64 {
    debug_assert_eq!(tx.len(), rx.len());
    tx.iter()
        .zip(rx)
        .map(|(&a, &b)| (a ^ b).count_ones() as u64)
        .sum()
}

/// Run one detector on one frame, returning decided pattern indices.
fn detect_frame(
    kind: DetectorKind,
    inst: &FrameInstance,
    c: &Constellation,
    det: &DetectorConfig,
    noise_variance: f64,
) -> Result<Vec<u16>> {
    match kind {
        DetectorKind::LcSpa => {
            let gram = compute_gram(&inst.h);
            let r = matched_filter(&inst.y, &inst.h)?;
            let pg = PrunedGram::new(&gram, r, det.n_i)?;
            let (d, _) = detect_pruned(&pg, c, det)?;
            Ok(d.hard_indices)
        }
        DetectorKind::CanonicalSpa => {
            let beliefs = canonical_spa(&inst.y, &inst.h, noise_variance, det.k_max_iters, c)?;
            Ok(beliefs
                .iter()
                .map(|row| {
                    let mut best = 0usize;
                    for (i, &p) in row.iter().enumerate().skip(1) {
                        if p > row[best] {
                            best = i;
                        }
                    }
                    best as u16
                })
                .collect())
        }
        DetectorKind::Lmmse => {
            let soft = lmmse_estimate(&inst.y, &inst.h, noise_variance)?;
            Ok(soft.into_iter().map(|v| c.slice(v) as u16).collect())
        }
        DetectorKind::MapBruteforce => {
            let decided = map_bruteforce(&inst.y, &inst.h, c, OracleLimits::default())?;
            decided
                .values
                .iter()
                .map(|&s| c.index_of(s).map(|i| i as u16))
                .collect()
        }
    }
}

/// Sweep every SNR point of the configuration, counting bit errors until
/// the stop rule is met per point.
pub fn run_ber_sweep(cfg: &SimConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let c = cfg.constellation()?;
    let bits_per_frame = cfg.bits_per_frame()?;
    let mut rows = Vec::new();

    for (snr_index, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        let start = Instant::now();
        let noise_variance = snr_to_noise_variance(snr_db, &c).variance;
        let det = point_detector_config(cfg, noise_variance);
        let mut frames = 0u64;
        let mut errors = 0u64;
        while frames < cfg.max_frames && errors < cfg.min_bit_errors {
            let batch = BATCH_FRAMES.min(cfg.max_frames - frames);
            let outcomes: Result<Vec<u64>> = (frames..frames + batch)
                .into_par_iter()
                .map(|frame_index| {
                    let inst = make_frame(cfg, &c, snr_index as u64, frame_index, noise_variance)?;
                    let rx = detect_frame(cfg.detector_kind, &inst, &c, &det, noise_variance)
                        .map_err(|e| {
                            e.with_context(format!(
                                "snr {snr_db} dB, frame {frame_index}, detector {}",
                                cfg.detector_kind
                            ))
                        })?;
                    Ok(bit_errors(&inst.tx_patterns, &rx))
                })
                .collect();
            errors += outcomes?.iter().sum::<u64>();
            frames += batch;
        }
        rows.push(TrialRecord::new(
            snr_db,
            cfg.detector_kind.to_string(),
            cfg.detector.n_i,
            cfg.detector.k_max_iters,
            frames,
            frames * bits_per_frame,
            errors,
            start.elapsed().as_secs_f64(),
        ));
    }
    Ok(ResultTable {
        meta: RunMeta::new(cfg, Vec::new()),
        rows,
    })
}

/// Measure BER after every iteration `1..=k_max_iters` at one SNR point,
/// reading the per-iteration decisions of the same detection runs.
///
/// Only the low-complexity detector exposes the iteration trace; early
/// stopping is disabled so every frame contributes all iterations. The
/// stop rule applies to the final iteration's error count.
pub fn run_iteration_profile(cfg: &SimConfig, snr_db: f64, n_i: usize) -> Result<ResultTable> {
    cfg.validate()?;
    if cfg.detector_kind != DetectorKind::LcSpa {
        return Err(Error::Config(
            "iteration profile requires detector_kind = lc-spa".into(),
        ));
    }
    let c = cfg.constellation()?;
    let bits_per_frame = cfg.bits_per_frame()?;
    let (n_i, mut warnings) = clamp_n_i(cfg, n_i);
    let start = Instant::now();

    let noise_variance = snr_to_noise_variance(snr_db, &c).variance;
    let mut det = point_detector_config(cfg, noise_variance);
    det.n_i = n_i;
    det.early_stop = false;
    let k_max = det.k_max_iters;
    let snr_index = 0u64;

    let mut frames = 0u64;
    let mut errors_per_iter = vec![0u64; k_max];
    while frames < cfg.max_frames && errors_per_iter[k_max - 1] < cfg.min_bit_errors {
        let batch = BATCH_FRAMES.min(cfg.max_frames - frames);
        let outcomes: Result<Vec<Vec<u64>>> = (frames..frames + batch)
            .into_par_iter()
            .map(|frame_index| {
                let inst = make_frame(cfg, &c, snr_index, frame_index, noise_variance)?;
                let gram = compute_gram(&inst.h);
                let r = matched_filter(&inst.y, &inst.h)?;
                let pg = PrunedGram::new(&gram, r, det.n_i)?;
                let (_, trace) = detect_pruned(&pg, &c, &det).map_err(|e| {
                    e.with_context(format!("snr {snr_db} dB, frame {frame_index}"))
                })?;
                Ok(trace
                    .per_iteration_decisions
                    .iter()
                    .map(|rx| bit_errors(&inst.tx_patterns, rx))
                    .collect())
            })
            .collect();
        for frame_errors in outcomes? {
            for (acc, e) in errors_per_iter.iter_mut().zip(frame_errors) {
                *acc += e;
            }
        }
        frames += batch;
    }

    let seconds = start.elapsed().as_secs_f64();
    let rows = errors_per_iter
        .iter()
        .enumerate()
        .map(|(k, &errs)| {
            TrialRecord::new(
                snr_db,
                cfg.detector_kind.to_string(),
                n_i,
                k + 1,
                frames,
                frames * bits_per_frame,
                errs,
                seconds,
            )
        })
        .collect();
    warnings.shrink_to_fit();
    Ok(ResultTable {
        meta: RunMeta::new(cfg, warnings),
        rows,
    })
}

/// Sweep the pruning size over `n_i_list` with common random numbers:
/// every frame's channel, bits and noise are shared across all `n_i`
/// values, so the comparison is paired.
pub fn run_pruning_profile(cfg: &SimConfig, n_i_list: &[usize]) -> Result<ResultTable> {
    cfg.validate()?;
    if cfg.detector_kind != DetectorKind::LcSpa {
        return Err(Error::Config(
            "pruning profile requires detector_kind = lc-spa".into(),
        ));
    }
    if n_i_list.is_empty() {
        return Err(Error::Config("n_i_list must not be empty".into()));
    }
    let c = cfg.constellation()?;
    let bits_per_frame = cfg.bits_per_frame()?;
    let mut warnings = Vec::new();
    let n_i_values: Vec<usize> = n_i_list
        .iter()
        .map(|&n_i| {
            let (clamped, w) = clamp_n_i(cfg, n_i);
            warnings.extend(w);
            clamped
        })
        .collect();

    let mut rows = Vec::new();
    for (snr_index, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        let start = Instant::now();
        let noise_variance = snr_to_noise_variance(snr_db, &c).variance;
        let base_det = point_detector_config(cfg, noise_variance);
        let mut frames = 0u64;
        let mut errors = vec![0u64; n_i_values.len()];
        while frames < cfg.max_frames && errors.iter().any(|&e| e < cfg.min_bit_errors) {
            let batch = BATCH_FRAMES.min(cfg.max_frames - frames);
            let outcomes: Result<Vec<Vec<u64>>> = (frames..frames + batch)
                .into_par_iter()
                .map(|frame_index| {
                    let inst = make_frame(cfg, &c, snr_index as u64, frame_index, noise_variance)?;
                    // Shared Gram and matched filter; only the pruning varies.
                    let gram = compute_gram(&inst.h);
                    let r = matched_filter(&inst.y, &inst.h)?;
                    n_i_values
                        .iter()
                        .map(|&n_i| {
                            let pg = PrunedGram::new(&gram, r.clone(), n_i)?;
                            let det = DetectorConfig { n_i, ..base_det };
                            let (d, _) = detect_pruned(&pg, &c, &det).map_err(|e| {
                                e.with_context(format!(
                                    "snr {snr_db} dB, frame {frame_index}, n_i {n_i}"
                                ))
                            })?;
                            Ok(bit_errors(&inst.tx_patterns, &d.hard_indices))
                        })
                        .collect()
                })
                .collect();
            for frame_errors in outcomes? {
                for (acc, e) in errors.iter_mut().zip(frame_errors) {
                    *acc += e;
                }
            }
            frames += batch;
        }
        let seconds = start.elapsed().as_secs_f64();
        for (&n_i, &errs) in n_i_values.iter().zip(&errors) {
            rows.push(TrialRecord::new(
                snr_db,
                cfg.detector_kind.to_string(),
                n_i,
                cfg.detector.k_max_iters,
                frames,
                frames * bits_per_frame,
                errs,
                seconds,
            ));
        }
    }
    Ok(ResultTable {
        meta: RunMeta::new(cfg, warnings),
        rows,
    })
}

/// Clamp an `n_i` request to the `NM - 1` maximum, recording a warning.
fn clamp_n_i(cfg: &SimConfig, n_i: usize) -> (usize, Vec<String>) {
    let max = cfg.n_doppler * cfg.m_delay - 1;
    if n_i > max {
        (
            max,
            vec![format!("n_i {n_i} exceeds NM-1 = {max}; clamped to {max}")],
        )
    } else {
        (n_i, Vec::new())
    }
}
