//! Browser playground for delay-Doppler channels and sum-product
//! detection.
//!
//! Three interactive operations back the static page in `www/`:
//! a channel explorer (spreading function and Gram coupling structure),
//! a single-frame detection run with per-iteration error counts, and a
//! mini BER sweep. Everything is seeded and single-threaded so results
//! are reproducible in the browser.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use wasm_bindgen::prelude::*;

use otfs_core::channel::{
    apply_channel, build_effective_channel, sample_paths, snr_to_noise_variance, NoiseSpec,
    SpreadWindow,
};
use otfs_core::constellation::Constellation;
use otfs_core::detector::{detect_detailed, DetectorConfig};
use otfs_core::frame::SymbolVector;
use otfs_core::gram::compute_gram;

/// Channel parameters shared by all demo operations.
#[derive(Clone, Copy)]
struct ChannelParams {
    n: usize,
    m: usize,
    num_paths: usize,
    l_max: usize,
    k_max: f64,
    fractional: bool,
}

impl ChannelParams {
    fn check(n: u32, m: u32, num_paths: u32, l_max: u32, k_max: f64, fractional: bool) -> Result<Self, String> {
        let p = Self {
            n: n as usize,
            m: m as usize,
            num_paths: num_paths as usize,
            l_max: l_max as usize,
            k_max,
            fractional,
        };
        if p.n < 2 || p.m < 2 || p.n * p.m > 4096 {
            return Err(format!("grid {}x{} outside the demo range", p.n, p.m));
        }
        if p.num_paths == 0 || p.num_paths > 16 {
            return Err("path count must be in 1..=16".into());
        }
        if p.l_max >= p.m {
            return Err(format!("l_max {} must be below M={}", p.l_max, p.m));
        }
        if !(k_max >= 0.0) || k_max >= p.n as f64 / 2.0 {
            return Err(format!("k_max {k_max} must lie in [0, N/2)"));
        }
        Ok(p)
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> Result<otfs_core::channel::PathSet, String> {
        sample_paths(rng, self.num_paths, self.l_max, self.k_max, self.fractional)
            .map_err(|e| e.to_string())
    }
}

struct ChannelViewData {
    spreading_mag: Vec<f64>,
    gram_row_mag: Vec<f64>,
    gram_diag: f64,
    nonzeros_per_row: u32,
}

fn channel_view_data(params: ChannelParams, seed: u64) -> Result<ChannelViewData, String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let ps = params.sample(&mut rng)?;
    let h = build_effective_channel(&ps, params.n, params.m, SpreadWindow::Full)
        .map_err(|e| e.to_string())?;
    let spreading_mag = h.spreading_grid().iter().map(|v| v.norm()).collect();
    let gram = compute_gram(&h);
    let mut gram_row_mag = vec![0.0; params.n * params.m];
    gram_row_mag[0] = gram.diagonal();
    for &(dk, dl, q) in gram.offsets() {
        gram_row_mag[dk * params.m + dl] = q.norm();
    }
    Ok(ChannelViewData {
        spreading_mag,
        gram_row_mag,
        gram_diag: gram.diagonal(),
        nonzeros_per_row: h.matrix().row_nnz(0) as u32,
    })
}

struct DetectionRunData {
    symbol_errors_per_iteration: Vec<u32>,
    received: Vec<f64>,
    truth: Vec<u16>,
    decided: Vec<u16>,
    converged: bool,
}

fn detection_run_data(
    params: ChannelParams,
    snr_db: f64,
    n_i: usize,
    damping: f64,
    iterations: usize,
    seed: u64,
) -> Result<DetectionRunData, String> {
    let c = Constellation::qpsk();
    let nm = params.n * params.m;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let ps = params.sample(&mut rng)?;
    let h = build_effective_channel(&ps, params.n, params.m, SpreadWindow::Full)
        .map_err(|e| e.to_string())?;
    let truth: Vec<u16> = (0..nm).map(|_| rng.random_range(0..c.len()) as u16).collect();
    let x = SymbolVector {
        values: truth.iter().map(|&i| c.point(i as usize)).collect(),
    };
    let noise = snr_to_noise_variance(snr_db, &c);
    let y = apply_channel(&h, &x, NoiseSpec::new(noise.variance).map_err(|e| e.to_string())?, &mut rng)
        .map_err(|e| e.to_string())?;
    let cfg = DetectorConfig {
        n_i: n_i.clamp(1, nm - 1),
        damping,
        k_max_iters: iterations.max(1),
        ..DetectorConfig::default()
    };
    let (det, trace) = detect_detailed(&y, &h, &c, &cfg).map_err(|e| e.to_string())?;
    let symbol_errors_per_iteration = trace
        .per_iteration_decisions
        .iter()
        .map(|d| d.iter().zip(&truth).filter(|(a, b)| a != b).count() as u32)
        .collect();
    let received = y.values.iter().flat_map(|v| [v.re, v.im]).collect();
    Ok(DetectionRunData {
        symbol_errors_per_iteration,
        received,
        truth,
        decided: det.hard_indices,
        converged: det.converged,
    })
}

fn ber_curve_data(
    params: ChannelParams,
    snr_grid_db: &[f64],
    frames_per_point: usize,
    n_i: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if snr_grid_db.is_empty() || frames_per_point == 0 {
        return Err("need at least one SNR point and one frame".into());
    }
    let c = Constellation::qpsk();
    let nm = params.n * params.m;
    let cfg = DetectorConfig {
        n_i: n_i.clamp(1, nm - 1),
        damping: 0.5,
        k_max_iters: iterations.max(1),
        ..DetectorConfig::default()
    };
    let mut bers = Vec::with_capacity(snr_grid_db.len());
    for (snr_index, &snr_db) in snr_grid_db.iter().enumerate() {
        let noise = snr_to_noise_variance(snr_db, &c);
        let mut bit_errors = 0u64;
        for frame in 0..frames_per_point {
            let mut rng =
                ChaCha12Rng::seed_from_u64(seed ^ ((snr_index as u64) << 40) ^ frame as u64);
            let ps = params.sample(&mut rng)?;
            let h = build_effective_channel(&ps, params.n, params.m, SpreadWindow::Full)
                .map_err(|e| e.to_string())?;
            let truth: Vec<u16> = (0..nm).map(|_| rng.random_range(0..c.len()) as u16).collect();
            let x = SymbolVector {
                values: truth.iter().map(|&i| c.point(i as usize)).collect(),
            };
            let y = apply_channel(
                &h,
                &x,
                NoiseSpec::new(noise.variance).map_err(|e| e.to_string())?,
                &mut rng,
            )
            .map_err(|e| e.to_string())?;
            let (det, _) = detect_detailed(&y, &h, &c, &cfg).map_err(|e| e.to_string())?;
            bit_errors += det
                .hard_indices
                .iter()
                .zip(&truth)
                .map(|(&a, &b)| (a ^ b).count_ones() as u64)
                .sum::<u64>();
        }
        let bits = (frames_per_point * nm * c.bits_per_symbol()) as f64;
        bers.push(bit_errors as f64 / bits);
    }
    Ok(bers)
}

// ---------------------------------------------------------------------------
// wasm-bindgen surface
// ---------------------------------------------------------------------------

/// Spreading function and Gram coupling structure of one random channel.
#[wasm_bindgen]
pub struct ChannelView {
    inner: ChannelViewData,
    n: u32,
    m: u32,
}

#[wasm_bindgen]
impl ChannelView {
    /// `N x M` magnitudes of the spreading function, row-major in Doppler.
    #[wasm_bindgen(getter)]
    pub fn spreading(&self) -> Vec<f64> {
        self.inner.spreading_mag.clone()
    }

    /// `N x M` magnitudes of Gram row zero arranged by offset; entry 0
    /// is the diagonal.
    #[wasm_bindgen(getter)]
    pub fn gram_row(&self) -> Vec<f64> {
        self.inner.gram_row_mag.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn gram_diagonal(&self) -> f64 {
        self.inner.gram_diag
    }

    #[wasm_bindgen(getter)]
    pub fn nonzeros_per_row(&self) -> u32 {
        self.inner.nonzeros_per_row
    }

    #[wasm_bindgen(getter)]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[wasm_bindgen(getter)]
    pub fn m(&self) -> u32 {
        self.m
    }
}

/// Draw a random channel and expose its delay-Doppler structure.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn channel_view(
    n: u32,
    m: u32,
    num_paths: u32,
    l_max: u32,
    k_max: f64,
    fractional: bool,
    seed: u64,
) -> Result<ChannelView, JsValue> {
    let params = ChannelParams::check(n, m, num_paths, l_max, k_max, fractional)
        .map_err(|e| JsValue::from_str(&e))?;
    let inner = channel_view_data(params, seed).map_err(|e| JsValue::from_str(&e))?;
    Ok(ChannelView { inner, n, m })
}

/// One detection run with the per-iteration error trace.
#[wasm_bindgen]
pub struct DetectionRun {
    inner: DetectionRunData,
}

#[wasm_bindgen]
impl DetectionRun {
    /// Wrong symbol decisions after each iteration.
    #[wasm_bindgen(getter)]
    pub fn symbol_errors_per_iteration(&self) -> Vec<u32> {
        self.inner.symbol_errors_per_iteration.clone()
    }

    /// Received samples as interleaved re/im pairs.
    #[wasm_bindgen(getter)]
    pub fn received(&self) -> Vec<f64> {
        self.inner.received.clone()
    }

    /// Transmitted constellation indices.
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<u16> {
        self.inner.truth.clone()
    }

    /// Final decided constellation indices.
    #[wasm_bindgen(getter)]
    pub fn decided(&self) -> Vec<u16> {
        self.inner.decided.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn converged(&self) -> bool {
        self.inner.converged
    }
}

/// Modulate, pass through a random channel and detect one frame.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn detection_run(
    n: u32,
    m: u32,
    num_paths: u32,
    l_max: u32,
    k_max: f64,
    fractional: bool,
    snr_db: f64,
    n_i: u32,
    damping: f64,
    iterations: u32,
    seed: u64,
) -> Result<DetectionRun, JsValue> {
    let params = ChannelParams::check(n, m, num_paths, l_max, k_max, fractional)
        .map_err(|e| JsValue::from_str(&e))?;
    if !(0.0..1.0).contains(&damping) {
        return Err(JsValue::from_str("damping must lie in [0, 1)"));
    }
    let inner = detection_run_data(
        params,
        snr_db,
        n_i as usize,
        damping,
        iterations as usize,
        seed,
    )
    .map_err(|e| JsValue::from_str(&e))?;
    Ok(DetectionRun { inner })
}

/// Small seeded Monte-Carlo BER sweep; returns one BER per SNR point.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn ber_curve(
    n: u32,
    m: u32,
    num_paths: u32,
    l_max: u32,
    k_max: f64,
    fractional: bool,
    snr_grid_db: Vec<f64>,
    frames_per_point: u32,
    n_i: u32,
    iterations: u32,
    seed: u64,
) -> Result<Vec<f64>, JsValue> {
    let params = ChannelParams::check(n, m, num_paths, l_max, k_max, fractional)
        .map_err(|e| JsValue::from_str(&e))?;
    if frames_per_point > 200 {
        return Err(JsValue::from_str("frames_per_point capped at 200 in the demo"));
    }
    ber_curve_data(
        params,
        &snr_grid_db,
        frames_per_point as usize,
        n_i as usize,
        iterations as usize,
        seed,
    )
    .map_err(|e| JsValue::from_str(&e))
}

/// QPSK constellation points as interleaved re/im pairs, for plotting.
#[wasm_bindgen]
pub fn constellation_points() -> Vec<f64> {
    Constellation::qpsk()
        .points()
        .iter()
        .flat_map(|p: &Complex64| [p.re, p.im])
        .collect()
}
