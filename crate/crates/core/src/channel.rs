//! Sparse delay-Doppler channels and the effective channel matrix.
//!
//! A channel is a set of `P` paths, each with a complex gain, an integer
//! delay tap and a real Doppler tap. The delay-Doppler spreading function
//! places each path's gain on the Doppler bins through the periodic
//! Dirichlet kernel
//!
//! ```text
//! D_N(x) = 1/N * sum_{n=0}^{N-1} exp(j*2*pi*n*x/N)
//! ```
//!
//! which is an exact impulse for integer `x` and spreads across all bins
//! for fractional Doppler. The effective channel is the `NM x NM`
//! two-level circulant matrix `H[u, u'] = h_w[(k-k') mod N, (l-l') mod M]`
//! acting on vectorized frames, `y = Hx + w`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::frame::SymbolVector;
use crate::sparse::CsrMatrix;

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub delay_tap: usize,
    pub doppler_tap: f64,
}

/// A `P`-path sparse delay-Doppler channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

/// Per-entry complex noise variance `sigma^2 = N0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub variance: f64,
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::Config(format!("noise variance {variance} < 0")));
        }
        Ok(Self { variance })
    }

    pub fn noiseless() -> Self {
        Self { variance: 0.0 }
    }
}

/// The effective delay-Doppler channel `y = Hx + w`.
///
/// `H` is two-level circulant: every row is a 2D circular shift of row
/// zero, so all rows store the same number of nonzeros. The assembled
/// spreading function (possibly truncated per path) is kept alongside the
/// compressed-row matrix.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    n_doppler: usize,
    m_delay: usize,
    /// Dense `N x M` spreading grid, row-major in Doppler.
    h_w: Vec<Complex64>,
    /// Nonzero spreading entries `(k, l, value)`, sorted by `(k, l)`.
    stencil: Vec<(usize, usize, Complex64)>,
    matrix: CsrMatrix,
}

/// Spread window for fractional-Doppler truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadWindow {
    /// Keep every Doppler bin of every path.
    Full,
    /// Keep only the `2w+1` largest-magnitude bins of each path.
    Truncated(usize),
}

/// Periodic Dirichlet kernel `D_N(x)`, exact on integer lattice points.
pub fn dirichlet_kernel(x: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    if x == x.round() {
        // Integer offsets are exact: 1 on the zero residue, 0 elsewhere.
        let xi = x.round() as i64;
        return if xi.rem_euclid(n as i64) == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let phase = std::f64::consts::PI * x * (nf - 1.0) / nf;
    let mag = (std::f64::consts::PI * x).sin() / (nf * (std::f64::consts::PI * x / nf).sin());
    Complex64::new(phase.cos(), phase.sin()) * mag
}

/// Draw a random `P`-path channel.
///
/// Delay taps are uniform on `{0..=l_max}`; Doppler taps are uniform on
/// `[-k_max, k_max]`, restricted to integers unless `fractional` is set.
/// Gains are i.i.d. circularly-symmetric Gaussian with variance `1/P`.
pub fn sample_paths<R: Rng>(
    rng: &mut R,
    num_paths: usize,
    l_max: usize,
    k_max: f64,
    fractional: bool,
) -> Result<PathSet> {
    if num_paths == 0 {
        return Err(Error::Config("path count must be at least 1".into()));
    }
    if !(k_max >= 0.0) {
        return Err(Error::Config(format!("k_max {k_max} must be >= 0")));
    }
    let sigma = (1.0 / (2.0 * num_paths as f64)).sqrt();
    let paths = (0..num_paths)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let delay_tap = rng.random_range(0..=l_max);
            let doppler_tap = if fractional {
                rng.random_range(-k_max..=k_max)
            } else {
                rng.random_range(-(k_max.floor() as i64)..=(k_max.floor() as i64)) as f64
            };
            Path {
                gain: Complex64::new(re * sigma, im * sigma),
                delay_tap,
                doppler_tap,
            }
        })
        .collect();
    Ok(PathSet { paths })
}

impl PathSet {
    /// Check tap bounds against a grid size.
    pub fn validate(&self, n_doppler: usize, m_delay: usize) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::Config("path set is empty".into()));
        }
        for (i, p) in self.paths.iter().enumerate() {
            if p.delay_tap >= m_delay {
                return Err(Error::Config(format!(
                    "path {i}: delay tap {} not below M={m_delay}",
                    p.delay_tap
                )));
            }
            if p.doppler_tap.abs() >= n_doppler as f64 / 2.0 {
                return Err(Error::Config(format!(
                    "path {i}: Doppler tap {} not below N/2={}",
                    p.doppler_tap,
                    n_doppler as f64 / 2.0
                )));
            }
        }
        Ok(())
    }

    /// One path per line: `re(h) im(h) delay_tap doppler_tap`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.paths {
            out.push_str(&format!(
                "{} {} {} {}\n",
                p.gain.re, p.gain.im, p.delay_tap, p.doppler_tap
            ));
        }
        out
    }

    /// Parse the [`to_text`](Self::to_text) format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut paths = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "path line {}: expected 4 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parse_f = |s: &str, what: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("path line {}: {what}: {e}", lineno + 1)))
            };
            let re = parse_f(fields[0], "re(h)")?;
            let im = parse_f(fields[1], "im(h)")?;
            let delay_tap = fields[2].parse::<usize>().map_err(|e| {
                Error::Parse(format!("path line {}: delay tap: {e}", lineno + 1))
            })?;
            let doppler_tap = parse_f(fields[3], "doppler tap")?;
            paths.push(Path {
                gain: Complex64::new(re, im),
                delay_tap,
                doppler_tap,
            });
        }
        if paths.is_empty() {
            return Err(Error::Parse("no paths in text".into()));
        }
        Ok(Self { paths })
    }
}

/// Evaluate the full (untruncated) spreading function on the `N x M` grid:
/// `h_w[k, l] = sum_{i: l_i = l} h_i * D_N(k - kappa_i)`.
pub fn build_spreading_function(
    ps: &PathSet,
    n_doppler: usize,
    m_delay: usize,
) -> Result<Vec<Complex64>> {
    assemble_spreading(ps, n_doppler, m_delay, SpreadWindow::Full)
}

fn assemble_spreading(
    ps: &PathSet,
    n_doppler: usize,
    m_delay: usize,
    window: SpreadWindow,
) -> Result<Vec<Complex64>> {
    ps.validate(n_doppler, m_delay)?;
    let mut grid = vec![Complex64::new(0.0, 0.0); n_doppler * m_delay];
    let mut bins: Vec<(usize, Complex64)> = Vec::with_capacity(n_doppler);
    for p in &ps.paths {
        bins.clear();
        for k in 0..n_doppler {
            let d = dirichlet_kernel(k as f64 - p.doppler_tap, n_doppler);
            if d.norm_sqr() > 0.0 {
                bins.push((k, d));
            }
        }
        if let SpreadWindow::Truncated(w) = window {
            let keep = (2 * w + 1).min(bins.len());
            // Largest-magnitude bins win; ties resolve to the lower bin.
            bins.sort_by(|a, b| {
                b.1.norm_sqr()
                    .partial_cmp(&a.1.norm_sqr())
                    .unwrap()
                    .then(a.0.cmp(&b.0))
            });
            bins.truncate(keep);
        }
        for &(k, d) in &bins {
            grid[k * m_delay + p.delay_tap] += p.gain * d;
        }
    }
    Ok(grid)
}

/// Assemble the effective channel matrix from a path set.
///
/// With a finite `spread_window` and fractional Doppler, each path keeps
/// only its `2w+1` strongest Doppler bins; the kept values are used as-is
/// (no renormalization).
pub fn build_effective_channel(
    ps: &PathSet,
    n_doppler: usize,
    m_delay: usize,
    spread_window: SpreadWindow,
) -> Result<EffectiveChannel> {
    let h_w = assemble_spreading(ps, n_doppler, m_delay, spread_window)?;
    let mut stencil = Vec::new();
    for k in 0..n_doppler {
        for l in 0..m_delay {
            let v = h_w[k * m_delay + l];
            if v != Complex64::new(0.0, 0.0) {
                stencil.push((k, l, v));
            }
        }
    }
    let nm = n_doppler * m_delay;
    let mut rows = Vec::with_capacity(nm);
    for k in 0..n_doppler {
        for l in 0..m_delay {
            let mut row = Vec::with_capacity(stencil.len());
            for &(dk, dl, v) in &stencil {
                let col_k = (k + n_doppler - dk) % n_doppler;
                let col_l = (l + m_delay - dl) % m_delay;
                row.push((col_k * m_delay + col_l, v));
            }
            rows.push(row);
        }
    }
    let matrix = CsrMatrix::from_rows(nm, rows)?;
    Ok(EffectiveChannel {
        n_doppler,
        m_delay,
        h_w,
        stencil,
        matrix,
    })
}

impl EffectiveChannel {
    pub fn n_doppler(&self) -> usize {
        self.n_doppler
    }

    pub fn m_delay(&self) -> usize {
        self.m_delay
    }

    /// Matrix dimension `NM`.
    pub fn dim(&self) -> usize {
        self.n_doppler * self.m_delay
    }

    /// The assembled spreading grid (`N x M`, row-major).
    pub fn spreading_grid(&self) -> &[Complex64] {
        &self.h_w
    }

    /// Nonzero spreading entries `(k, l, value)`, sorted by `(k, l)`.
    pub fn stencil(&self) -> &[(usize, usize, Complex64)] {
        &self.stencil
    }

    /// The compressed-row matrix.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Single entry `H[u, u'] = h_w[(k-k') mod N, (l-l') mod M]`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let (k, l) = (row / self.m_delay, row % self.m_delay);
        let (kp, lp) = (col / self.m_delay, col % self.m_delay);
        let dk = (k + self.n_doppler - kp) % self.n_doppler;
        let dl = (l + self.m_delay - lp) % self.m_delay;
        self.h_w[dk * self.m_delay + dl]
    }
}

/// Apply the channel: `y = Hx + w` with i.i.d. circularly-symmetric
/// complex Gaussian noise of per-entry variance `noise.variance`.
pub fn apply_channel<R: Rng>(
    h: &EffectiveChannel,
    x: &SymbolVector,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<SymbolVector> {
    let mut values = h.matrix.matvec(&x.values)?;
    if noise.variance > 0.0 {
        let sigma = (noise.variance / 2.0).sqrt();
        for v in values.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *v += Complex64::new(re * sigma, im * sigma);
        }
    }
    Ok(SymbolVector { values })
}

/// Convert an SNR in dB to a noise variance, with SNR defined as
/// `Es/N0` and `Es` the constellation's mean symbol energy (1 for the
/// unit-energy constellations this crate builds).
pub fn snr_to_noise_variance(snr_db: f64, c: &Constellation) -> NoiseSpec {
    let es = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.len() as f64;
    NoiseSpec {
        variance: es * 10f64.powf(-snr_db / 10.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_path(gain: Complex64, delay: usize, doppler: f64) -> PathSet {
        PathSet {
            paths: vec![Path {
                gain,
                delay_tap: delay,
                doppler_tap: doppler,
            }],
        }
    }

    #[test]
    fn dirichlet_matches_direct_sum() {
        // Direct N-term summation as the independent oracle.
        let direct = |x: f64, n: usize| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let phi = 2.0 * std::f64::consts::PI * i as f64 * x / n as f64;
                acc += Complex64::from_polar(1.0, phi);
            }
            acc / n as f64
        };
        for &n in &[2usize, 5, 16, 64] {
            for &x in &[0.0, 1.0, -3.0, 0.5, -0.25, 3.7, 17.2, n as f64] {
                let got = dirichlet_kernel(x, n);
                let want = direct(x, n);
                assert!(
                    (got - want).norm() < 1e-12,
                    "D_{n}({x}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn spreading_integer_doppler_is_impulse() {
        let ps = single_path(c64(1.0, 0.0), 0, 0.0);
        let g = build_spreading_function(&ps, 4, 8).unwrap();
        assert_eq!(g[0], c64(1.0, 0.0));
        assert!(g[1..].iter().all(|v| *v == c64(0.0, 0.0)));

        let ps = single_path(c64(1.0, 0.0), 3, 2.0);
        let g = build_spreading_function(&ps, 8, 8).unwrap();
        for k in 0..8 {
            for l in 0..8 {
                let expect = if (k, l) == (2, 3) { 1.0 } else { 0.0 };
                assert_eq!(g[k * 8 + l], c64(expect, 0.0), "bin ({k},{l})");
            }
        }
    }

    #[test]
    fn spreading_fractional_magnitudes() {
        let n = 8usize;
        let ps = single_path(c64(1.0, 0.0), 0, 0.5);
        let g = build_spreading_function(&ps, n, 4).unwrap();
        for k in 0..n {
            let x = k as f64 - 0.5;
            let want =
                ((std::f64::consts::PI * x).sin() / (n as f64 * (std::f64::consts::PI * x / n as f64).sin()))
                    .abs();
            assert!((g[k * 4].norm() - want).abs() < 1e-12, "bin {k}");
            for l in 1..4 {
                assert_eq!(g[k * 4 + l], c64(0.0, 0.0));
            }
        }
    }

    #[test]
    fn sample_paths_respects_bounds_and_power() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let mut total_power = 0.0;
        let draws = 10_000;
        for _ in 0..draws {
            let ps = sample_paths(&mut rng, 4, 10, 8.0, false).unwrap();
            assert_eq!(ps.paths.len(), 4);
            for p in &ps.paths {
                assert!(p.delay_tap <= 10);
                assert!(p.doppler_tap.abs() <= 8.0);
                assert_eq!(p.doppler_tap, p.doppler_tap.round());
            }
            total_power += ps.paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>();
        }
        let mean_power = total_power / draws as f64;
        assert!((mean_power - 1.0).abs() < 0.03, "mean power {mean_power}");
    }

    #[test]
    fn sample_paths_degenerate_and_fractional() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let ps = sample_paths(&mut rng, 1, 0, 0.0, false).unwrap();
        assert_eq!(ps.paths[0].delay_tap, 0);
        assert_eq!(ps.paths[0].doppler_tap, 0.0);

        let ps = sample_paths(&mut rng, 16, 5, 3.0, true).unwrap();
        assert!(ps.paths.iter().any(|p| p.doppler_tap != p.doppler_tap.round()));

        assert!(sample_paths(&mut rng, 0, 5, 3.0, false).is_err());
        assert!(sample_paths(&mut rng, 2, 5, -1.0, false).is_err());
    }

    #[test]
    fn identity_channel_from_unit_path() {
        let ps = single_path(c64(1.0, 0.0), 0, 0.0);
        let h = build_effective_channel(&ps, 2, 4, SpreadWindow::Full).unwrap();
        let dense = h.matrix().to_dense();
        for r in 0..8 {
            for c in 0..8 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert_eq!(dense[r * 8 + c], c64(expect, 0.0));
            }
        }
    }

    #[test]
    fn integer_doppler_has_p_nonzeros_per_row_and_column() {
        let paths = vec![
            Path { gain: c64(0.5, 0.1), delay_tap: 0, doppler_tap: 0.0 },
            Path { gain: c64(-0.3, 0.2), delay_tap: 1, doppler_tap: 1.0 },
            Path { gain: c64(0.1, -0.7), delay_tap: 3, doppler_tap: -2.0 },
            Path { gain: c64(0.2, 0.2), delay_tap: 2, doppler_tap: 3.0 },
        ];
        let ps = PathSet { paths };
        let h = build_effective_channel(&ps, 8, 4, SpreadWindow::Full).unwrap();
        let nm = 32;
        let mut col_counts = vec![0usize; nm];
        for r in 0..nm {
            assert_eq!(h.matrix().row_nnz(r), 4);
            for (c, _) in h.matrix().row(r) {
                col_counts[c] += 1;
            }
        }
        assert!(col_counts.iter().all(|&c| c == 4));
    }

    #[test]
    fn apply_channel_noiseless_is_exact_product() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let ps = sample_paths(&mut rng, 2, 3, 1.0, false).unwrap();
        let h = build_effective_channel(&ps, 4, 8, SpreadWindow::Full).unwrap();
        let x = SymbolVector {
            values: (0..32).map(|i| c64((i as f64).cos(), (i as f64).sin())).collect(),
        };
        let y = apply_channel(&h, &x, NoiseSpec::noiseless(), &mut rng).unwrap();
        let want = h.matrix().matvec(&x.values).unwrap();
        for (a, b) in y.values.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_variance_is_calibrated() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let ps = single_path(c64(1.0, 0.0), 0, 0.0);
        let h = build_effective_channel(&ps, 2, 2, SpreadWindow::Full).unwrap();
        let x = SymbolVector {
            values: vec![c64(0.0, 0.0); 4],
        };
        let noise = NoiseSpec::new(0.1).unwrap();
        let mut acc = 0.0;
        let samples = 100_000 / 4;
        for _ in 0..samples {
            let y = apply_channel(&h, &x, noise, &mut rng).unwrap();
            acc += y.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        let measured = acc / (samples * 4) as f64;
        assert!((measured - 0.1).abs() < 0.003, "measured {measured}");
    }

    #[test]
    fn snr_conversion_table() {
        let c = Constellation::qpsk();
        assert!((snr_to_noise_variance(0.0, &c).variance - 1.0).abs() < 1e-12);
        assert!((snr_to_noise_variance(10.0, &c).variance - 0.1).abs() < 1e-12);
        assert!((snr_to_noise_variance(15.0, &c).variance - 0.031_622_776_601_683_79).abs() < 1e-12);
    }

    #[test]
    fn path_text_round_trip() {
        let ps = PathSet {
            paths: vec![
                Path { gain: c64(0.25, -0.125), delay_tap: 3, doppler_tap: -1.5 },
                Path { gain: c64(-1.0, 0.0625), delay_tap: 0, doppler_tap: 4.0 },
            ],
        };
        let text = ps.to_text();
        let back = PathSet::from_text(&text).unwrap();
        assert_eq!(ps, back);
        assert!(PathSet::from_text("1 2 3\n").is_err());
        assert!(PathSet::from_text("").is_err());
    }
}
