//! Oracle and comparison detectors: exhaustive MAP, exhaustive posterior
//! marginals, the canonical per-observation sum-product receiver, and an
//! LMMSE equalizer.
//!
//! The exhaustive routines enumerate every hypothesis vector and are
//! capped by [`OracleLimits`]; they exist to certify the low-complexity
//! detector on small instances, so they favor clarity and exactness over
//! scale.

use num_complex::Complex64;

use crate::channel::EffectiveChannel;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::frame::{fft2, SymbolVector};

/// Enumeration cap for the exhaustive oracles.
#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    pub max_hypotheses: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_hypotheses: 1 << 20,
        }
    }
}

fn hypothesis_count(a_len: usize, dim: usize, limits: OracleLimits) -> Result<u64> {
    let mut count: u128 = 1;
    for _ in 0..dim {
        count = count.checked_mul(a_len as u128).ok_or_else(|| {
            Error::Refused(format!(
                "{a_len}^{dim} hypotheses overflow the enumeration budget"
            ))
        })?;
        if count > limits.max_hypotheses as u128 {
            return Err(Error::Refused(format!(
                "{a_len}^{dim} hypotheses exceed the cap of {}",
                limits.max_hypotheses
            )));
        }
    }
    Ok(count as u64)
}

/// Walk all hypothesis vectors in lexicographic order (index 0 most
/// significant), maintaining the residual `y - Hx` incrementally, and
/// hand `(metric, digits)` to the visitor.
fn enumerate_hypotheses<F>(
    y: &SymbolVector,
    h: &EffectiveChannel,
    c: &Constellation,
    limits: OracleLimits,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(f64, &[u16]),
{
    let dim = h.dim();
    if y.len() != dim {
        return Err(Error::Dimension(format!(
            "received vector has length {}, channel dimension is {dim}",
            y.len()
        )));
    }
    let a_len = c.len();
    let total = hypothesis_count(a_len, dim, limits)?;

    // Column supports of H, for incremental residual updates.
    let mut columns: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
    for w in 0..dim {
        for (u, v) in h.matrix().row(w) {
            columns[u].push((w, v));
        }
    }

    let mut digits = vec![0u16; dim];
    // Residual for the all-zeros-pattern hypothesis.
    let x0 = c.point(0);
    let mut residual: Vec<Complex64> = y.values.clone();
    for col in &columns {
        for &(w, v) in col {
            residual[w] -= v * x0;
        }
    }

    for step in 0..total {
        let metric: f64 = residual.iter().map(|r| r.norm_sqr()).sum();
        visit(metric, &digits);
        if step + 1 == total {
            break;
        }
        // Odometer increment; index dim-1 moves fastest.
        let mut u = dim - 1;
        loop {
            let old = digits[u] as usize;
            let new = (old + 1) % a_len;
            digits[u] = new as u16;
            let delta = c.point(new) - c.point(old);
            for &(w, v) in &columns[u] {
                residual[w] -= v * delta;
            }
            if new != 0 {
                break;
            }
            u -= 1;
        }
    }
    Ok(())
}

/// Exhaustive MAP detection: the exact minimizer of `||y - Hx||^2` over
/// all hypothesis vectors (ties resolve to the lexicographically
/// smallest index vector). Refuses instances above the hypothesis cap.
pub fn map_bruteforce(
    y: &SymbolVector,
    h: &EffectiveChannel,
    c: &Constellation,
    limits: OracleLimits,
) -> Result<SymbolVector> {
    let mut best_metric = f64::INFINITY;
    let mut best: Vec<u16> = Vec::new();
    enumerate_hypotheses(y, h, c, limits, |metric, digits| {
        if metric < best_metric {
            best_metric = metric;
            best = digits.to_vec();
        }
    })?;
    Ok(SymbolVector {
        values: best.iter().map(|&d| c.point(d as usize)).collect(),
    })
}

/// Exhaustive per-symbol posterior marginals,
/// `P(x_u = a | y) ∝ sum over x with x_u = a of exp(-||y - Hx||^2 / sigma^2)`,
/// accumulated with a streaming log-sum-exp. At `sigma^2 = 0` the
/// posterior degenerates to an indicator on the MAP decision.
pub fn marginals_bruteforce(
    y: &SymbolVector,
    h: &EffectiveChannel,
    noise_variance: f64,
    c: &Constellation,
    limits: OracleLimits,
) -> Result<Vec<Vec<f64>>> {
    let dim = h.dim();
    let a_len = c.len();
    if noise_variance == 0.0 {
        let map = map_bruteforce(y, h, c, limits)?;
        return map
            .values
            .iter()
            .map(|&s| {
                let idx = c.index_of(s)?;
                let mut row = vec![0.0; a_len];
                row[idx] = 1.0;
                Ok(row)
            })
            .collect();
    }

    // Streaming log-sum-exp accumulators per (symbol, point).
    let mut max_exp = vec![f64::NEG_INFINITY; dim * a_len];
    let mut sums = vec![0.0f64; dim * a_len];
    enumerate_hypotheses(y, h, c, limits, |metric, digits| {
        let t = -metric / noise_variance;
        for (u, &d) in digits.iter().enumerate() {
            let slot = u * a_len + d as usize;
            if t <= max_exp[slot] {
                sums[slot] += (t - max_exp[slot]).exp();
            } else {
                sums[slot] = sums[slot] * (max_exp[slot] - t).exp() + 1.0;
                max_exp[slot] = t;
            }
        }
    })?;

    let mut marginals = Vec::with_capacity(dim);
    for u in 0..dim {
        let logs: Vec<f64> = (0..a_len)
            .map(|a| {
                let slot = u * a_len + a;
                max_exp[slot] + sums[slot].ln()
            })
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
        let z: f64 = weights.iter().sum();
        marginals.push(weights.into_iter().map(|w| w / z).collect());
    }
    Ok(marginals)
}

/// Canonical per-observation sum-product receiver.
///
/// Factor nodes are the entries of `y`, connected to the symbols their
/// row of `H` touches. Factor-to-variable messages enumerate all
/// configurations of the other connected symbols, so each factor of
/// degree `d` costs `|A|^(d-1)` per outgoing message; factors above the
/// built-in budget of 4096 configurations are refused, as is
/// `sigma^2 = 0` (the probability-domain kernel needs a proper
/// likelihood). Messages are renormalized to sum one; beliefs are the
/// normalized products of all incoming messages.
pub fn canonical_spa(
    y: &SymbolVector,
    h: &EffectiveChannel,
    noise_variance: f64,
    iterations: usize,
    c: &Constellation,
) -> Result<Vec<Vec<f64>>> {
    const MAX_CONFIGS: u64 = 4096;
    let dim = h.dim();
    if y.len() != dim {
        return Err(Error::Dimension(format!(
            "received vector has length {}, channel dimension is {dim}",
            y.len()
        )));
    }
    if !(noise_variance > 0.0) {
        return Err(Error::Refused(
            "canonical SPA requires a positive noise variance".into(),
        ));
    }
    let a_len = c.len();

    // Factor adjacency from the nonzeros of H.
    let factor_vars: Vec<Vec<(usize, Complex64)>> =
        (0..dim).map(|w| h.matrix().row(w).collect()).collect();
    for (w, vars) in factor_vars.iter().enumerate() {
        if vars.len() > 1 {
            let configs = (a_len as u64).checked_pow(vars.len() as u32 - 1);
            if configs.is_none_or(|c| c > MAX_CONFIGS) {
                return Err(Error::Refused(format!(
                    "factor {w} has degree {}, enumeration exceeds {MAX_CONFIGS} configurations",
                    vars.len()
                )));
            }
        }
    }
    let mut var_factors: Vec<Vec<(usize, usize)>> = vec![Vec::new(); dim];
    for (w, vars) in factor_vars.iter().enumerate() {
        for (slot, &(u, _)) in vars.iter().enumerate() {
            var_factors[u].push((w, slot));
        }
    }

    // Messages indexed by (factor, slot): uniform variable messages in,
    // unset factor messages out.
    let slot_base: Vec<usize> = factor_vars
        .iter()
        .scan(0usize, |acc, vars| {
            let base = *acc;
            *acc += vars.len();
            Some(base)
        })
        .collect();
    let total_slots: usize = factor_vars.iter().map(|v| v.len()).sum();
    let uniform = 1.0 / a_len as f64;
    let mut v2f = vec![uniform; total_slots * a_len];
    let mut f2v = vec![uniform; total_slots * a_len];

    let mut others: Vec<(usize, Complex64)> = Vec::new();
    let mut config = Vec::new();
    for _ in 0..iterations {
        // Factor-to-variable sweep, reading last iteration's v2f.
        for (w, vars) in factor_vars.iter().enumerate() {
            for (slot, &(_, h_target)) in vars.iter().enumerate() {
                others.clear();
                others.extend(
                    vars.iter()
                        .enumerate()
                        .filter(|&(s, _)| s != slot)
                        .map(|(s, &(_, hv))| {
                            let m_base = (slot_base[w] + s) * a_len;
                            (m_base, hv)
                        }),
                );
                config.clear();
                config.resize(others.len(), 0usize);

                // Pass 1: the largest exponent over configurations and
                // target symbols, for stable exponentiation.
                let mut max_e = f64::NEG_INFINITY;
                loop {
                    let base: Complex64 = y.values[w]
                        - others
                            .iter()
                            .zip(&config)
                            .map(|(&(_, hv), &ci)| hv * c.point(ci))
                            .sum::<Complex64>();
                    for a in 0..a_len {
                        let res = base - h_target * c.point(a);
                        let e = -res.norm_sqr() / noise_variance;
                        if e > max_e {
                            max_e = e;
                        }
                    }
                    if !advance(&mut config, a_len) {
                        break;
                    }
                }

                // Pass 2: accumulate exp(e - max_e) * prod(messages).
                let mut acc = vec![0.0f64; a_len];
                loop {
                    let mut weight = 1.0;
                    let mut base = y.values[w];
                    for (&(m_base, hv), &ci) in others.iter().zip(&config) {
                        weight *= v2f[m_base + ci];
                        base -= hv * c.point(ci);
                    }
                    for (a, acc_a) in acc.iter_mut().enumerate() {
                        let res = base - h_target * c.point(a);
                        let e = -res.norm_sqr() / noise_variance;
                        *acc_a += (e - max_e).exp() * weight;
                    }
                    if !advance(&mut config, a_len) {
                        break;
                    }
                }
                let z: f64 = acc.iter().sum();
                debug_assert!(z > 0.0);
                let out = (slot_base[w] + slot) * a_len;
                for (a, &v) in acc.iter().enumerate() {
                    f2v[out + a] = v / z;
                }
            }
        }

        // Variable-to-factor sweep, reading the fresh f2v.
        for facs in &var_factors {
            for &(w, slot) in facs {
                let mut msg = vec![1.0f64; a_len];
                for &(w2, slot2) in facs {
                    if (w2, slot2) == (w, slot) {
                        continue;
                    }
                    let base = (slot_base[w2] + slot2) * a_len;
                    for (a, m) in msg.iter_mut().enumerate() {
                        *m *= f2v[base + a];
                    }
                }
                let z: f64 = msg.iter().sum();
                debug_assert!(z > 0.0);
                let out = (slot_base[w] + slot) * a_len;
                for (a, &v) in msg.iter().enumerate() {
                    v2f[out + a] = v / z;
                }
            }
        }
    }

    // Beliefs: normalized product of all incoming factor messages.
    let mut beliefs = Vec::with_capacity(dim);
    for facs in &var_factors {
        let mut b = vec![1.0f64; a_len];
        for &(w, slot) in facs {
            let base = (slot_base[w] + slot) * a_len;
            for (a, bv) in b.iter_mut().enumerate() {
                *bv *= f2v[base + a];
            }
        }
        let z: f64 = b.iter().sum();
        beliefs.push(if z > 0.0 {
            b.into_iter().map(|v| v / z).collect()
        } else {
            vec![uniform; a_len]
        });
    }
    Ok(beliefs)
}

fn advance(config: &mut [usize], a_len: usize) -> bool {
    for digit in config.iter_mut().rev() {
        *digit += 1;
        if *digit < a_len {
            return true;
        }
        *digit = 0;
    }
    false
}

/// LMMSE soft estimate `(H^H H + sigma^2 I)^{-1} H^H y`.
///
/// Exploits the two-level circulant structure: the estimate is computed
/// pointwise in the 2D Fourier domain, with the denominator floored at
/// `1e-12` so a rank-deficient noiseless system stays solvable.
pub fn lmmse_estimate(
    y: &SymbolVector,
    h: &EffectiveChannel,
    noise_variance: f64,
) -> Result<Vec<Complex64>> {
    let (n, m) = (h.n_doppler(), h.m_delay());
    if y.len() != n * m {
        return Err(Error::Dimension(format!(
            "received vector has length {}, channel dimension is {}",
            y.len(),
            n * m
        )));
    }
    if noise_variance < 0.0 {
        return Err(Error::Config(format!(
            "noise variance {noise_variance} < 0"
        )));
    }
    let mut h_hat = h.spreading_grid().to_vec();
    fft2(&mut h_hat, n, m, true);
    let mut x_hat = y.values.clone();
    fft2(&mut x_hat, n, m, true);
    for (xv, hv) in x_hat.iter_mut().zip(&h_hat) {
        let denom = (hv.norm_sqr() + noise_variance).max(1e-12);
        *xv = hv.conj() * *xv / denom;
    }
    fft2(&mut x_hat, n, m, false);
    let scale = 1.0 / (n * m) as f64;
    for v in x_hat.iter_mut() {
        *v *= scale;
    }
    Ok(x_hat)
}

/// LMMSE equalizer: the soft estimate sliced to the nearest
/// constellation points.
pub fn lmmse(
    y: &SymbolVector,
    h: &EffectiveChannel,
    noise_variance: f64,
    c: &Constellation,
) -> Result<SymbolVector> {
    let soft = lmmse_estimate(y, h, noise_variance)?;
    Ok(SymbolVector {
        values: soft.into_iter().map(|v| c.point(c.slice(v))).collect(),
    })
}
