//! Delay-Doppler frames, the symplectic Fourier transform pair, and the
//! vectorization convention.
//!
//! An OTFS frame is an `N x M` grid of symbols `x[k, l]`, `k` indexing
//! Doppler (`0..N`) and `l` indexing delay (`0..M`). The ISFFT maps the
//! frame to the time-frequency grid
//!
//! ```text
//! X[n, m] = 1/sqrt(NM) * sum_{k,l} x[k,l] * exp(j*2*pi*(n*k/N - m*l/M))
//! ```
//!
//! and the SFFT is its exact inverse; both are unitary. Vectorization is
//! Doppler-major: entry `(k, l)` maps to index `u = k*M + l`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::constellation::Constellation;
use crate::error::{Error, Result};

/// An `N x M` delay-Doppler symbol grid, stored row-major in `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DDFrame {
    n_doppler: usize,
    m_delay: usize,
    symbols: Vec<Complex64>,
}

/// An `N x M` time-frequency grid (`n` = time slot, `m` = subcarrier).
#[derive(Debug, Clone, PartialEq)]
pub struct TfGrid {
    pub n_time: usize,
    pub m_freq: usize,
    pub values: Vec<Complex64>,
}

/// A vectorized frame; index `u = k*M + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector {
    pub values: Vec<Complex64>,
}

impl DDFrame {
    pub fn new(n_doppler: usize, m_delay: usize, symbols: Vec<Complex64>) -> Result<Self> {
        if symbols.len() != n_doppler * m_delay {
            return Err(Error::InputSize {
                expected: n_doppler * m_delay,
                got: symbols.len(),
            });
        }
        Ok(Self {
            n_doppler,
            m_delay,
            symbols,
        })
    }

    pub fn zeros(n_doppler: usize, m_delay: usize) -> Self {
        Self {
            n_doppler,
            m_delay,
            symbols: vec![Complex64::new(0.0, 0.0); n_doppler * m_delay],
        }
    }

    pub fn n_doppler(&self) -> usize {
        self.n_doppler
    }

    pub fn m_delay(&self) -> usize {
        self.m_delay
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.symbols[k * self.m_delay + l]
    }

    pub fn set(&mut self, k: usize, l: usize, v: Complex64) {
        self.symbols[k * self.m_delay + l] = v;
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }
}

impl SymbolVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Map a bit sequence onto an `N x M` frame.
///
/// Consecutive `bits_per_symbol` groups select constellation points in
/// vectorization order (`u = k*M + l`). The bit count must be exactly
/// `N*M*bits_per_symbol`.
pub fn map_bits(
    bits: &[u8],
    c: &Constellation,
    n_doppler: usize,
    m_delay: usize,
) -> Result<DDFrame> {
    let expected = n_doppler * m_delay * c.bits_per_symbol();
    if bits.len() != expected {
        return Err(Error::InputSize {
            expected,
            got: bits.len(),
        });
    }
    let symbols = bits
        .chunks(c.bits_per_symbol())
        .map(|group| c.point(c.pattern_of_bits(group)))
        .collect();
    DDFrame::new(n_doppler, m_delay, symbols)
}

/// Recover the bit sequence from a frame of exact constellation points.
///
/// Inverse of [`map_bits`]; any entry that is not bit-exactly a
/// constellation point is a domain error.
pub fn demap_symbols(frame: &DDFrame, c: &Constellation) -> Result<Vec<u8>> {
    let mut bits = Vec::with_capacity(frame.symbols().len() * c.bits_per_symbol());
    for &s in frame.symbols() {
        let pattern = c.index_of(s)?;
        c.bits_of_pattern(pattern, &mut bits);
    }
    Ok(bits)
}

/// Vectorize a frame with the Doppler-major layout `u = k*M + l`.
pub fn vectorize(frame: &DDFrame) -> SymbolVector {
    SymbolVector {
        values: frame.symbols().to_vec(),
    }
}

/// Rebuild a frame from a symbol vector; the length must be `N*M`.
pub fn devectorize(v: &SymbolVector, n_doppler: usize, m_delay: usize) -> Result<DDFrame> {
    DDFrame::new(n_doppler, m_delay, v.values.clone())
}

/// ISFFT: delay-Doppler grid to time-frequency grid (unitary).
pub fn isfft(frame: &DDFrame) -> TfGrid {
    let (n, m) = (frame.n_doppler, frame.m_delay);
    let mut values = frame.symbols.clone();
    // IDFT along Doppler (k -> n), DFT along delay (l -> m).
    fft_columns(&mut values, n, m, false);
    fft_rows(&mut values, n, m, true);
    let scale = 1.0 / ((n * m) as f64).sqrt();
    for v in values.iter_mut() {
        *v *= scale;
    }
    TfGrid {
        n_time: n,
        m_freq: m,
        values,
    }
}

/// SFFT: time-frequency grid back to the delay-Doppler domain (exact
/// inverse of [`isfft`]).
pub fn sfft(grid: &TfGrid) -> Result<DDFrame> {
    let (n, m) = (grid.n_time, grid.m_freq);
    if grid.values.len() != n * m {
        return Err(Error::InputSize {
            expected: n * m,
            got: grid.values.len(),
        });
    }
    let mut values = grid.values.clone();
    // DFT along time (n -> k), IDFT along frequency (m -> l).
    fft_columns(&mut values, n, m, true);
    fft_rows(&mut values, n, m, false);
    let scale = 1.0 / ((n * m) as f64).sqrt();
    for v in values.iter_mut() {
        *v *= scale;
    }
    DDFrame::new(n, m, values)
}

/// In-place unnormalized 2D DFT (both axes forward, or both inverse).
pub(crate) fn fft2(values: &mut [Complex64], n: usize, m: usize, forward: bool) {
    fft_columns(values, n, m, forward);
    fft_rows(values, n, m, forward);
}

/// In-place unnormalized FFT of every length-`m` row of an `n x m` grid.
fn fft_rows(values: &mut [Complex64], n: usize, m: usize, forward: bool) {
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(m)
    } else {
        planner.plan_fft_inverse(m)
    };
    for row in 0..n {
        fft.process(&mut values[row * m..(row + 1) * m]);
    }
}

/// In-place unnormalized FFT of every length-`n` column of an `n x m` grid.
fn fft_columns(values: &mut [Complex64], n: usize, m: usize, forward: bool) {
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    };
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..m {
        for row in 0..n {
            scratch[row] = values[row * m + col];
        }
        fft.process(&mut scratch);
        for row in 0..n {
            values[row * m + col] = scratch[row];
        }
    }
}
