//! Shared independent oracles for the integration suites.
//!
//! Everything here recomputes results from first principles (direct
//! transform formulas, dense linear algebra, exhaustive loops) without
//! touching the implementation paths under test.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use otfs_core::channel::EffectiveChannel;
use otfs_core::constellation::Constellation;
use otfs_core::frame::{DDFrame, SymbolVector};

pub fn seeded(seed: u64) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_complex(rng: &mut ChaCha12Rng) -> Complex64 {
    c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_qpsk_vector(rng: &mut ChaCha12Rng, len: usize) -> SymbolVector {
    let c = Constellation::qpsk();
    SymbolVector {
        values: (0..len).map(|_| c.point(rng.random_range(0..4))).collect(),
    }
}

/// Direct ISFFT evaluation of the defining double sum, O((NM)^2).
pub fn isfft_direct(frame: &DDFrame) -> Vec<Complex64> {
    let (n, m) = (frame.n_doppler(), frame.m_delay());
    let scale = 1.0 / ((n * m) as f64).sqrt();
    let mut out = vec![c64(0.0, 0.0); n * m];
    for nn in 0..n {
        for mm in 0..m {
            let mut acc = c64(0.0, 0.0);
            for k in 0..n {
                for l in 0..m {
                    let phase = 2.0
                        * std::f64::consts::PI
                        * (nn as f64 * k as f64 / n as f64 - mm as f64 * l as f64 / m as f64);
                    acc += frame.get(k, l) * c64(phase.cos(), phase.sin());
                }
            }
            out[nn * m + mm] = acc * scale;
        }
    }
    out
}

/// Direct SFFT evaluation (inverse of the above), O((NM)^2).
pub fn sfft_direct(values: &[Complex64], n: usize, m: usize) -> Vec<Complex64> {
    let scale = 1.0 / ((n * m) as f64).sqrt();
    let mut out = vec![c64(0.0, 0.0); n * m];
    for k in 0..n {
        for l in 0..m {
            let mut acc = c64(0.0, 0.0);
            for nn in 0..n {
                for mm in 0..m {
                    let phase = -2.0
                        * std::f64::consts::PI
                        * (nn as f64 * k as f64 / n as f64 - mm as f64 * l as f64 / m as f64);
                    acc += values[nn * m + mm] * c64(phase.cos(), phase.sin());
                }
            }
            out[k * m + l] = acc * scale;
        }
    }
    out
}

/// The quadruple-loop input-output relation: for every output bin,
/// sum the full 2D circular convolution of the input grid with `h_w`.
pub fn conv2d_direct(
    x: &[Complex64],
    h_w: &[Complex64],
    n: usize,
    m: usize,
) -> Vec<Complex64> {
    let mut y = vec![c64(0.0, 0.0); n * m];
    for k in 0..n {
        for l in 0..m {
            let mut acc = c64(0.0, 0.0);
            for kp in 0..n {
                for lp in 0..m {
                    let dk = (k + n - kp) % n;
                    let dl = (l + m - lp) % m;
                    acc += x[kp * m + lp] * h_w[dk * m + dl];
                }
            }
            y[k * m + l] = acc;
        }
    }
    y
}

/// Dense copy of the effective channel.
pub fn dense_channel(h: &EffectiveChannel) -> Vec<Complex64> {
    h.matrix().to_dense()
}

/// Dense `A^H A` for a square row-major matrix.
pub fn dense_gram(a: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut q = vec![c64(0.0, 0.0); dim * dim];
    for u in 0..dim {
        for v in 0..dim {
            let mut acc = c64(0.0, 0.0);
            for w in 0..dim {
                acc += a[w * dim + u].conj() * a[w * dim + v];
            }
            q[u * dim + v] = acc;
        }
    }
    q
}

/// Dense `y^H A`.
pub fn dense_matched_filter(y: &[Complex64], a: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut r = vec![c64(0.0, 0.0); dim];
    for u in 0..dim {
        let mut acc = c64(0.0, 0.0);
        for w in 0..dim {
            acc += y[w].conj() * a[w * dim + u];
        }
        r[u] = acc;
    }
    r
}

/// Dense `A x`.
pub fn dense_matvec(a: &[Complex64], x: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut y = vec![c64(0.0, 0.0); dim];
    for w in 0..dim {
        let mut acc = c64(0.0, 0.0);
        for u in 0..dim {
            acc += a[w * dim + u] * x[u];
        }
        y[w] = acc;
    }
    y
}

/// Complex linear solve by Gaussian elimination with partial pivoting;
/// `a` is row-major `dim x dim`, consumed as a copy.
pub fn dense_solve(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&i, &j| {
                m[i * dim + col]
                    .norm_sqr()
                    .partial_cmp(&m[j * dim + col].norm_sqr())
                    .unwrap()
            })
            .unwrap();
        if pivot != col {
            for c in 0..dim {
                m.swap(col * dim + c, pivot * dim + c);
            }
            rhs.swap(col, pivot);
        }
        let p = m[col * dim + col];
        assert!(p.norm_sqr() > 0.0, "singular system in oracle solve");
        for row in (col + 1)..dim {
            let factor = m[row * dim + col] / p;
            if factor == c64(0.0, 0.0) {
                continue;
            }
            for c in col..dim {
                let sub = factor * m[col * dim + c];
                m[row * dim + c] -= sub;
            }
            let sub = factor * rhs[col];
            rhs[row] -= sub;
        }
    }
    for col in (0..dim).rev() {
        let mut acc = rhs[col];
        for c in (col + 1)..dim {
            acc -= m[col * dim + c] * rhs[c];
        }
        rhs[col] = acc / m[col * dim + col];
    }
    rhs
}
