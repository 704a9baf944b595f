//! Delay-Doppler (OTFS) link-level simulation with a low-complexity
//! log-domain sum-product detector.
//!
//! The crate covers the discrete modulation chain and its detection
//! counterparts end to end:
//!
//! - [`constellation`] / [`frame`] — symbol mapping, the `N x M`
//!   delay-Doppler grid, the unitary ISFFT/SFFT pair and vectorization;
//! - [`channel`] — random sparse multipath channels, the two-level
//!   circulant effective matrix `y = Hx + w`, fractional-Doppler
//!   spreading via the periodic Dirichlet kernel;
//! - [`gram`] / [`detector`] — the pairwise factor graph built from
//!   `Q = H^H H` and `r = y^H H`, per-row pruning to the `N_i` strongest
//!   couplings, and damped max-log (optionally log-sum-exp) message
//!   passing;
//! - [`baselines`] — exhaustive MAP and posterior oracles, the canonical
//!   per-observation sum-product receiver, and an LMMSE equalizer;
//! - [`harness`] — seeded, reproducible Monte-Carlo BER experiments with
//!   CSV/TOML persistence.

pub mod baselines;
pub mod channel;
pub mod constellation;
pub mod detector;
pub mod error;
pub mod frame;
pub mod gram;
pub mod harness;
pub mod sparse;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) fn test_rng(seed: u64) -> rand_chacha::ChaCha12Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha12Rng::seed_from_u64(seed)
}

#[cfg(test)]
pub(crate) fn random_frame(
    rng: &mut rand_chacha::ChaCha12Rng,
    n: usize,
    m: usize,
) -> frame::DDFrame {
    use rand::Rng;
    let symbols = (0..n * m)
        .map(|_| num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    frame::DDFrame::new(n, m, symbols).unwrap()
}
