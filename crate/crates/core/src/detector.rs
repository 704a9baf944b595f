//! Low-complexity log-domain sum-product detection on the pruned
//! pairwise factor graph.
//!
//! The posterior `p(x|y) ∝ exp(-(x^H Q x - 2 Re{r x}) / sigma^2)` with
//! `Q = H^H H`, `r = y^H H` factorizes over single symbols and symbol
//! pairs. Working with log-likelihoods to maximize, each variable `u`
//! carries the node potential
//!
//! ```text
//! n_u(a) = 2 Re{r_u a} - Q[u,u] |a|^2
//! ```
//!
//! and each unordered pair `{u, v}` of pruned neighbors carries the edge
//! potential
//!
//! ```text
//! e_uv(a, b) = -2 Re{conj(a) Q[u,v] b}
//! ```
//!
//! (the two conjugate ordered terms of the exponent combined). Messages
//! flow in the log domain with the max-log kernel by default, so one
//! update is a max over `|A|` sums and the detector never needs the
//! noise variance; the exact log-sum-exp kernel is available as an
//! option and then divides all potentials by `sigma^2`. Factor-to-variable
//! messages are damped by `lambda` (weight of the new value) and every
//! message is shifted so its maximum entry is zero. Iterations are
//! synchronous: all factor messages, then all variable messages, then
//! marginals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::EffectiveChannel;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::frame::SymbolVector;
use crate::gram::{compute_gram, matched_filter, PrunedGram};

/// Message combination kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `ln(exp a + exp b) ~ max(a, b)`; noise-variance free.
    MaxLog,
    /// Exact Jacobian logarithm; requires the noise variance.
    LogSumExp { noise_variance: f64 },
}

/// Detector parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Strongest off-diagonal couplings kept per Gram row.
    pub n_i: usize,
    /// Damping factor in `[0, 1)`, the weight of the new message.
    pub damping: f64,
    /// Number of message-passing iterations.
    pub k_max_iters: usize,
    #[serde(default = "Kernel::default_max_log")]
    pub kernel: Kernel,
    /// Stop once hard decisions are unchanged across two iterations.
    #[serde(default)]
    pub early_stop: bool,
    /// Multiplies all potentials; decisions are invariant to it.
    #[serde(default = "default_potential_scale")]
    pub potential_scale: f64,
}

fn default_potential_scale() -> f64 {
    1.0
}

impl Kernel {
    fn default_max_log() -> Self {
        Kernel::MaxLog
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            n_i: 40,
            damping: 0.5,
            k_max_iters: 20,
            kernel: Kernel::MaxLog,
            early_stop: false,
            potential_scale: 1.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_i < 1 {
            return Err(Error::Config("n_i must be at least 1".into()));
        }
        if !(self.damping >= 0.0 && self.damping < 1.0) {
            return Err(Error::Config(format!(
                "damping {} outside [0, 1)",
                self.damping
            )));
        }
        if self.k_max_iters < 1 {
            return Err(Error::Config("k_max_iters must be at least 1".into()));
        }
        if let Kernel::LogSumExp { noise_variance } = self.kernel {
            if !(noise_variance > 0.0) {
                return Err(Error::Config(
                    "log-sum-exp kernel needs a positive noise variance".into(),
                ));
            }
        }
        if !(self.potential_scale > 0.0) {
            return Err(Error::Config("potential_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Node potential `n_u(a) = 2 Re{r_u a} - Q[u,u] |a|^2` (unscaled).
pub fn node_potential(pg: &PrunedGram, u: usize, a: Complex64) -> f64 {
    2.0 * (pg.matched()[u] * a).re - pg.diag()[u] * a.norm_sqr()
}

/// Edge potential `e_uv(a, b) = -2 Re{conj(a) Q[u,v] b}` (unscaled).
///
/// Panics if `v` is not a pruned neighbor of `u`.
pub fn edge_potential(pg: &PrunedGram, u: usize, v: usize, a: Complex64, b: Complex64) -> f64 {
    -2.0 * (a.conj() * pg.coupling(u, v) * b).re
}

/// Direction of a factor-to-variable update on edge `{u, v}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToU,
    ToV,
}

/// Per-edge directed log-domain messages, node potentials and the
/// instrumentation counter.
#[derive(Debug, Clone)]
pub struct MessageStore {
    a_len: usize,
    num_nodes: usize,
    /// Unordered edges `(u, v)` with `u < v`.
    edges: Vec<(u32, u32)>,
    /// Per node, indices into `edges`.
    adj: Vec<Vec<u32>>,
    /// `num_nodes * a_len`, scaled node potentials.
    node_pot: Vec<f64>,
    /// `edges * a_len^2`, scaled edge potentials indexed `[a at u][b at v]`.
    edge_pot: Vec<f64>,
    /// Factor-to-variable messages: slot `2e` is toward `u`, `2e+1` toward `v`.
    f2v: Vec<f64>,
    /// Variable-to-factor messages: slot `2e` is from `u`, `2e+1` from `v`.
    v2f: Vec<f64>,
    max_log: bool,
    kernel_evals: u64,
}

impl MessageStore {
    /// Build potentials for a pruned instance; all messages start at zero.
    pub fn new(pg: &PrunedGram, c: &Constellation, cfg: &DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let a_len = c.len();
        if a_len > MAX_ALPHABET {
            return Err(Error::Config(format!(
                "alphabet size {a_len} exceeds the supported maximum {MAX_ALPHABET}"
            )));
        }
        let num_nodes = pg.dim();
        let scale = match cfg.kernel {
            Kernel::MaxLog => cfg.potential_scale,
            Kernel::LogSumExp { noise_variance } => cfg.potential_scale / noise_variance,
        };

        let mut node_pot = vec![0.0; num_nodes * a_len];
        for u in 0..num_nodes {
            for (ai, &a) in c.points().iter().enumerate() {
                node_pot[u * a_len + ai] = scale * node_potential(pg, u, a);
            }
        }

        let mut edges = Vec::new();
        let mut adj = vec![Vec::new(); num_nodes];
        let mut edge_pot = Vec::new();
        for u in 0..num_nodes {
            for &(v, q) in pg.neighbors(u) {
                if v <= u {
                    continue;
                }
                let e = edges.len() as u32;
                edges.push((u as u32, v as u32));
                adj[u].push(e);
                adj[v].push(e);
                for &a in c.points() {
                    for &b in c.points() {
                        edge_pot.push(scale * (-2.0 * (a.conj() * q * b).re));
                    }
                }
            }
        }

        let slots = 2 * edges.len() * a_len;
        Ok(Self {
            a_len,
            num_nodes,
            edges,
            adj,
            node_pot,
            edge_pot,
            f2v: vec![0.0; slots],
            v2f: vec![0.0; slots],
            max_log: matches!(cfg.kernel, Kernel::MaxLog),
            kernel_evals: 0,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn alphabet_len(&self) -> usize {
        self.a_len
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        (self.edges[e].0 as usize, self.edges[e].1 as usize)
    }

    /// Edge indices incident to node `u`.
    pub fn adjacent_edges(&self, u: usize) -> &[u32] {
        &self.adj[u]
    }

    /// Count of edge-kernel term evaluations so far.
    pub fn kernel_evals(&self) -> u64 {
        self.kernel_evals
    }

    /// Factor-to-variable message of edge `e` in `dir`.
    pub fn factor_message(&self, e: usize, dir: Direction) -> &[f64] {
        let slot = 2 * e + if dir == Direction::ToU { 0 } else { 1 };
        &self.f2v[slot * self.a_len..(slot + 1) * self.a_len]
    }

    /// Variable-to-factor message on edge `e` from the `ToU`/`ToV` endpoint.
    pub fn variable_message(&self, e: usize, from: Direction) -> &[f64] {
        let slot = 2 * e + if from == Direction::ToU { 0 } else { 1 };
        &self.v2f[slot * self.a_len..(slot + 1) * self.a_len]
    }

    /// One damped factor-to-variable update on edge `e`.
    ///
    /// The raw message toward `u` is `combine_b(e_uv(a, b) + m_v(b))`,
    /// where `combine` is `max` or log-sum-exp; the stored message is
    /// `damping * raw + (1 - damping) * previous`, shifted to max zero.
    pub fn update_factor_message(&mut self, e: usize, dir: Direction, damping: f64) {
        let a_len = self.a_len;
        let (out_slot, in_slot) = match dir {
            Direction::ToU => (2 * e, 2 * e + 1),
            Direction::ToV => (2 * e + 1, 2 * e),
        };
        let pot = &self.edge_pot[e * a_len * a_len..(e + 1) * a_len * a_len];
        let incoming = &self.v2f[in_slot * a_len..(in_slot + 1) * a_len];
        let mut raw = [0.0f64; MAX_ALPHABET];
        let raw = &mut raw[..a_len];
        for (t, r) in raw.iter_mut().enumerate() {
            // For ToU the output index is the symbol at u and we reduce
            // over v's alphabet; for ToV it is the reverse.
            let term = |o: usize| match dir {
                Direction::ToU => pot[t * a_len + o] + incoming[o],
                Direction::ToV => pot[o * a_len + t] + incoming[o],
            };
            *r = if self.max_log {
                (0..a_len).map(term).fold(f64::NEG_INFINITY, f64::max)
            } else {
                log_sum_exp((0..a_len).map(term))
            };
        }
        self.kernel_evals += (a_len * a_len) as u64;
        let out = &mut self.f2v[out_slot * a_len..(out_slot + 1) * a_len];
        damp_and_normalize(raw, out, damping);
    }

    /// Variable-to-factor update for every edge at node `u`:
    /// `m_{u->e}(a) = n_u(a) + sum_{g != e} mu_{g->u}(a)`, max-normalized.
    pub fn update_variable_messages(&mut self, u: usize) {
        let a_len = self.a_len;
        let mut total = [0.0f64; MAX_ALPHABET];
        let total = &mut total[..a_len];
        self.node_total(u, total);
        for i in 0..self.adj[u].len() {
            let e = self.adj[u][i] as usize;
            let toward_u = self.incoming_slot(e, u);
            let out_slot = toward_u; // same side index for the outgoing message
            let mut msg = [0.0f64; MAX_ALPHABET];
            let msg = &mut msg[..a_len];
            let inc = &self.f2v[toward_u * a_len..(toward_u + 1) * a_len];
            for a in 0..a_len {
                msg[a] = total[a] - inc[a];
            }
            normalize_max_zero(msg);
            self.v2f[out_slot * a_len..(out_slot + 1) * a_len].copy_from_slice(msg);
        }
    }

    /// Log-marginal `L_u(a) = n_u(a) + sum_g mu_{g->u}(a)`, max-normalized.
    pub fn log_marginal(&self, u: usize) -> Vec<f64> {
        let mut total = vec![0.0; self.a_len];
        self.node_total(u, &mut total);
        normalize_max_zero(&mut total);
        total
    }

    /// Argmax decisions over the current marginals; ties resolve to the
    /// lowest constellation index.
    pub fn hard_decisions(&self) -> Vec<u16> {
        let mut out = Vec::with_capacity(self.num_nodes);
        let mut total = vec![0.0; self.a_len];
        for u in 0..self.num_nodes {
            self.node_total(u, &mut total);
            out.push(argmax(&total) as u16);
        }
        out
    }

    /// Node potential plus all incoming factor messages (unnormalized).
    fn node_total(&self, u: usize, out: &mut [f64]) {
        let a_len = self.a_len;
        out.copy_from_slice(&self.node_pot[u * a_len..(u + 1) * a_len]);
        for &e in &self.adj[u] {
            let slot = self.incoming_slot(e as usize, u);
            let msg = &self.f2v[slot * a_len..(slot + 1) * a_len];
            for a in 0..a_len {
                out[a] += msg[a];
            }
        }
    }

    /// Message-slot index of edge `e` on the `u` side.
    fn incoming_slot(&self, e: usize, u: usize) -> usize {
        if self.edges[e].0 as usize == u {
            2 * e
        } else {
            debug_assert_eq!(self.edges[e].1 as usize, u);
            2 * e + 1
        }
    }
}

const MAX_ALPHABET: usize = 64;

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `out = damping * raw + (1 - damping) * out`, then shift max to zero.
fn damp_and_normalize(raw: &[f64], out: &mut [f64], damping: f64) {
    for (o, &r) in out.iter_mut().zip(raw) {
        *o = damping * r + (1.0 - damping) * *o;
    }
    normalize_max_zero(out);
}

fn normalize_max_zero(msg: &mut [f64]) {
    let m = msg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for v in msg.iter_mut() {
        *v -= m;
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Detection output.
#[derive(Debug, Clone)]
pub struct Detection {
    /// Hard symbol decisions in vectorization order.
    pub hard_symbols: SymbolVector,
    /// Constellation indices of the hard decisions.
    pub hard_indices: Vec<u16>,
    /// Max-normalized log-marginals, one length-`|A|` vector per symbol.
    pub log_marginals: Vec<Vec<f64>>,
    pub iterations_run: usize,
    /// Hard decisions were unchanged over the final two iterations.
    pub converged: bool,
}

/// Per-iteration instrumentation from [`detect_detailed`].
#[derive(Debug, Clone)]
pub struct DetectionTrace {
    /// Hard decisions after each iteration.
    pub per_iteration_decisions: Vec<Vec<u16>>,
    /// Edge-kernel term evaluations spent in each iteration.
    pub kernel_evals_per_iteration: Vec<u64>,
}

/// Run the detector on a received vector: compute the pruned Gram and
/// matched filter, then message-pass for `k_max_iters` iterations.
pub fn detect(
    y: &SymbolVector,
    h: &EffectiveChannel,
    c: &Constellation,
    cfg: &DetectorConfig,
) -> Result<Detection> {
    detect_detailed(y, h, c, cfg).map(|(d, _)| d)
}

/// [`detect`] plus the per-iteration trace.
pub fn detect_detailed(
    y: &SymbolVector,
    h: &EffectiveChannel,
    c: &Constellation,
    cfg: &DetectorConfig,
) -> Result<(Detection, DetectionTrace)> {
    cfg.validate()?;
    if y.len() != h.dim() {
        return Err(Error::Dimension(format!(
            "received vector has length {}, channel dimension is {}",
            y.len(),
            h.dim()
        )));
    }
    let gram = compute_gram(h);
    let r = matched_filter(y, h)?;
    let pg = PrunedGram::new(&gram, r, cfg.n_i)?;
    detect_pruned(&pg, c, cfg)
}

/// Message passing on an already pruned instance.
pub fn detect_pruned(
    pg: &PrunedGram,
    c: &Constellation,
    cfg: &DetectorConfig,
) -> Result<(Detection, DetectionTrace)> {
    let mut store = MessageStore::new(pg, c, cfg)?;
    let mut decisions: Vec<Vec<u16>> = Vec::with_capacity(cfg.k_max_iters);
    let mut evals = Vec::with_capacity(cfg.k_max_iters);
    let mut converged = false;

    for _ in 0..cfg.k_max_iters {
        let before = store.kernel_evals();
        for e in 0..store.num_edges() {
            store.update_factor_message(e, Direction::ToU, cfg.damping);
            store.update_factor_message(e, Direction::ToV, cfg.damping);
        }
        for u in 0..store.num_nodes() {
            store.update_variable_messages(u);
        }
        let hard = store.hard_decisions();
        evals.push(store.kernel_evals() - before);
        let stable = decisions.last() == Some(&hard);
        decisions.push(hard);
        converged = stable;
        if cfg.early_stop && stable {
            break;
        }
    }

    let hard = decisions.last().cloned().unwrap_or_default();
    let log_marginals = (0..store.num_nodes())
        .map(|u| store.log_marginal(u))
        .collect();
    let detection = Detection {
        hard_symbols: SymbolVector {
            values: hard.iter().map(|&i| c.point(i as usize)).collect(),
        },
        hard_indices: hard,
        log_marginals,
        iterations_run: decisions.len(),
        converged,
    };
    Ok((
        detection,
        DetectionTrace {
            per_iteration_decisions: decisions,
            kernel_evals_per_iteration: evals,
        },
    ))
}
