//! Simulation configuration and presets.

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};

/// Which detector runs inside the Monte-Carlo loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    LcSpa,
    CanonicalSpa,
    Lmmse,
    MapBruteforce,
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectorKind::LcSpa => "lc-spa",
            DetectorKind::CanonicalSpa => "canonical-spa",
            DetectorKind::Lmmse => "lmmse",
            DetectorKind::MapBruteforce => "map-bruteforce",
        })
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lc-spa" => Ok(DetectorKind::LcSpa),
            "canonical-spa" => Ok(DetectorKind::CanonicalSpa),
            "lmmse" => Ok(DetectorKind::Lmmse),
            "map-bruteforce" => Ok(DetectorKind::MapBruteforce),
            other => Err(Error::Config(format!(
                "unknown detector kind '{other}' (expected lc-spa, canonical-spa, lmmse or map-bruteforce)"
            ))),
        }
    }
}

/// Full description of a Monte-Carlo experiment.
///
/// SNR is `Es/N0` with `Es = 1` (unit-energy constellations); the
/// physical path delays and Dopplers follow from the grid taps as
/// `tau_i = l_i / (M * subcarrier_hz)` and
/// `nu_i = kappa_i * subcarrier_hz / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_doppler: usize,
    pub m_delay: usize,
    pub modulation: String,
    pub num_paths: usize,
    pub l_max: usize,
    pub k_max: f64,
    pub fractional: bool,
    pub carrier_hz: f64,
    pub subcarrier_hz: f64,
    pub snr_grid_db: Vec<f64>,
    pub detector: DetectorConfig,
    pub detector_kind: DetectorKind,
    /// Stop an SNR point once this many bit errors are collected ...
    pub min_bit_errors: u64,
    /// ... or this many frames were simulated, whichever comes first.
    pub max_frames: u64,
    pub seed: u64,
}

impl SimConfig {
    /// Full-size experiment shape: 64 x 128 QPSK frames, four paths with
    /// delay taps up to 10 and fractional Doppler taps up to 8, 4 GHz
    /// carrier with 15 kHz subcarriers, damping 0.5.
    pub fn paper_preset() -> Self {
        Self {
            n_doppler: 64,
            m_delay: 128,
            modulation: "qpsk".into(),
            num_paths: 4,
            l_max: 10,
            k_max: 8.0,
            fractional: true,
            carrier_hz: 4.0e9,
            subcarrier_hz: 15.0e3,
            snr_grid_db: vec![6.0, 9.0, 12.0, 15.0, 18.0],
            detector: DetectorConfig::default(),
            detector_kind: DetectorKind::LcSpa,
            min_bit_errors: 200,
            max_frames: 2000,
            seed: 1,
        }
    }

    /// Scaled-down shape for desk experiments: 16 x 32 grid with the
    /// same tap-to-grid ratios as [`paper_preset`](Self::paper_preset).
    pub fn desk_preset() -> Self {
        Self {
            n_doppler: 16,
            m_delay: 32,
            l_max: 3,
            k_max: 2.0,
            ..Self::paper_preset()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_doppler < 2 || self.m_delay < 2 {
            return Err(Error::Config(format!(
                "grid {}x{} too small: N and M must be at least 2",
                self.n_doppler, self.m_delay
            )));
        }
        self.constellation()?;
        if self.num_paths == 0 {
            return Err(Error::Config("num_paths must be at least 1".into()));
        }
        if self.l_max >= self.m_delay {
            return Err(Error::Config(format!(
                "l_max {} must be below M={}",
                self.l_max, self.m_delay
            )));
        }
        if !(self.k_max >= 0.0) || self.k_max >= self.n_doppler as f64 / 2.0 {
            return Err(Error::Config(format!(
                "k_max {} must lie in [0, N/2 = {})",
                self.k_max,
                self.n_doppler as f64 / 2.0
            )));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("snr_grid_db must not be empty".into()));
        }
        if self.min_bit_errors == 0 || self.max_frames == 0 {
            return Err(Error::Config(
                "stop rule must be positive: min_bit_errors >= 1 and max_frames >= 1".into(),
            ));
        }
        // The log-sum-exp kernel's noise variance is substituted per SNR
        // point by the runner, so the configured value is a placeholder.
        let mut det = self.detector;
        if let crate::detector::Kernel::LogSumExp { .. } = det.kernel {
            det.kernel = crate::detector::Kernel::LogSumExp { noise_variance: 1.0 };
        }
        det.validate()
    }

    /// The constellation named by `modulation`.
    pub fn constellation(&self) -> Result<Constellation> {
        match self.modulation.as_str() {
            "qpsk" => Ok(Constellation::qpsk()),
            other => Err(Error::Config(format!("unknown modulation '{other}'"))),
        }
    }

    pub fn bits_per_frame(&self) -> Result<u64> {
        let c = self.constellation()?;
        Ok((self.n_doppler * self.m_delay * c.bits_per_symbol()) as u64)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
