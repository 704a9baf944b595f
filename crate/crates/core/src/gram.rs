//! Gram matrix `Q = H^H H`, matched filter `r = y^H H`, and per-row
//! pruning of the pairwise coupling graph.
//!
//! Because `H` is two-level circulant, so is `Q`: every row is a 2D
//! circular shift of row zero and the diagonal is constant. The Gram is
//! therefore represented by its row-zero offset stencil, computed
//! sparsely from the channel's spreading stencil (only overlapping
//! spreading taps contribute). Pruning keeps, per row, the `N_i`
//! off-diagonal couplings of largest magnitude; the retained support is
//! made symmetric so that `v` neighbors `u` exactly when `u` neighbors
//! `v` and `Q[v,u] = conj(Q[u,v])`.

use num_complex::Complex64;

use crate::channel::EffectiveChannel;
use crate::error::{Error, Result};
use crate::frame::SymbolVector;

/// The Gram matrix of a two-level circulant channel, stored as the
/// offset stencil of row zero.
#[derive(Debug, Clone)]
pub struct Gram {
    n_doppler: usize,
    m_delay: usize,
    /// Constant diagonal value `Q[u,u]`.
    diag: f64,
    /// Off-diagonal offsets `(dk, dl, Q[u, u + (dk,dl)])`, sorted by
    /// linear offset `dk*M + dl`; excludes `(0,0)`.
    offsets: Vec<(usize, usize, Complex64)>,
}

impl Gram {
    pub fn dim(&self) -> usize {
        self.n_doppler * self.m_delay
    }

    pub fn diagonal(&self) -> f64 {
        self.diag
    }

    pub fn offsets(&self) -> &[(usize, usize, Complex64)] {
        &self.offsets
    }

    /// Materialize the off-diagonal entries of one row as sorted
    /// `(column, value)` pairs.
    pub fn row(&self, u: usize) -> Vec<(usize, Complex64)> {
        let (k, l) = (u / self.m_delay, u % self.m_delay);
        let mut row: Vec<(usize, Complex64)> = self
            .offsets
            .iter()
            .map(|&(dk, dl, q)| {
                let col = ((k + dk) % self.n_doppler) * self.m_delay + (l + dl) % self.m_delay;
                (col, q)
            })
            .collect();
        row.sort_by_key(|&(c, _)| c);
        row
    }
}

/// Compute `Q = H^H H` from the channel's spreading stencil.
///
/// Touches only overlapping stencil pairs: the offset `(a - b)` of every
/// pair of spreading taps `a, b` receives `conj(s_a) * s_b`.
pub fn compute_gram(h: &EffectiveChannel) -> Gram {
    let (n, m) = (h.n_doppler(), h.m_delay());
    let mut grid = vec![Complex64::new(0.0, 0.0); n * m];
    let stencil = h.stencil();
    for &(ka, la, sa) in stencil {
        for &(kb, lb, sb) in stencil {
            // Q[u, u + d] accumulates conj(s_a) s_b at d = a - b.
            let dk = (ka + n - kb) % n;
            let dl = (la + m - lb) % m;
            grid[dk * m + dl] += sa.conj() * sb;
        }
    }
    let diag = grid[0].re;
    debug_assert!(grid[0].im.abs() < 1e-9 * diag.abs().max(1.0));
    let offsets = grid
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, q)| **q != Complex64::new(0.0, 0.0))
        .map(|(i, &q)| (i / m, i % m, q))
        .collect();
    Gram {
        n_doppler: n,
        m_delay: m,
        diag,
        offsets,
    }
}

/// Matched filter `r = y^H H`, with `r[u] = sum_w conj(y[w]) H[w,u]`.
pub fn matched_filter(y: &SymbolVector, h: &EffectiveChannel) -> Result<Vec<Complex64>> {
    h.matrix().conj_left_mul(&y.values)
}

/// The pruned Gram: per-row strongest neighbors plus the matched filter.
#[derive(Debug, Clone)]
pub struct PrunedGram {
    diag: Vec<f64>,
    neighbors: Vec<Vec<(usize, Complex64)>>,
    r: Vec<Complex64>,
}

impl PrunedGram {
    /// Prune a circulant Gram to the `n_i` strongest off-diagonal
    /// couplings per row.
    ///
    /// The offset pattern is selected once from row zero (magnitude
    /// descending, ties to the smaller row-zero column) and shifted to
    /// every row. An offset is kept only when its negation is also kept,
    /// which makes the neighbor relation symmetric; when the `n_i`
    /// cutoff falls inside a conjugate offset pair, that pair is dropped
    /// and rows carry `n_i - 1` neighbors.
    pub fn new(gram: &Gram, r: Vec<Complex64>, n_i: usize) -> Result<Self> {
        let nm = gram.dim();
        if r.len() != nm {
            return Err(Error::Dimension(format!(
                "matched filter has length {}, Gram dimension is {nm}",
                r.len()
            )));
        }
        let (n, m) = (gram.n_doppler, gram.m_delay);
        let selected = select_offsets(gram, n_i);
        let mut neighbors = Vec::with_capacity(nm);
        for k in 0..n {
            for l in 0..m {
                let mut list: Vec<(usize, Complex64)> = selected
                    .iter()
                    .map(|&(dk, dl, q)| {
                        let col = ((k + dk) % n) * m + (l + dl) % m;
                        (col, q)
                    })
                    .collect();
                list.sort_by_key(|&(c, _)| c);
                neighbors.push(list);
            }
        }
        // The shared negation-closed offset pattern already makes the
        // neighbor relation symmetric; no per-row check needed here.
        Ok(Self {
            diag: vec![gram.diag; nm],
            neighbors,
            r,
        })
    }

    /// Generic per-row pruning path for validation: selects the top
    /// `n_i` entries of each materialized row independently, then keeps
    /// an edge only if both endpoint rows selected it.
    pub fn from_rows(
        diag: Vec<f64>,
        rows: &[Vec<(usize, Complex64)>],
        r: Vec<Complex64>,
        n_i: usize,
    ) -> Result<Self> {
        let nm = rows.len();
        if diag.len() != nm || r.len() != nm {
            return Err(Error::Dimension(
                "diag, rows and r must have equal length".into(),
            ));
        }
        let picked: Vec<Vec<(usize, Complex64)>> =
            rows.iter().map(|row| top_entries(row, n_i)).collect();
        let mut neighbors = vec![Vec::new(); nm];
        for (u, list) in picked.iter().enumerate() {
            for &(v, q) in list {
                if picked[v].iter().any(|&(w, _)| w == u) {
                    neighbors[u].push((v, q));
                }
            }
        }
        for list in neighbors.iter_mut() {
            list.sort_by_key(|&(c, _)| c);
        }
        let pg = Self { diag, neighbors, r };
        pg.check_symmetry()?;
        Ok(pg)
    }

    /// Build from raw parts, validating support symmetry and conjugate
    /// consistency. Intended for hand-built instances.
    pub fn from_parts(
        diag: Vec<f64>,
        neighbors: Vec<Vec<(usize, Complex64)>>,
        r: Vec<Complex64>,
    ) -> Result<Self> {
        if diag.len() != neighbors.len() || r.len() != neighbors.len() {
            return Err(Error::Dimension(
                "diag, neighbors and r must have equal length".into(),
            ));
        }
        let mut pg = Self { diag, neighbors, r };
        for list in pg.neighbors.iter_mut() {
            list.sort_by_key(|&(c, _)| c);
        }
        pg.check_symmetry()?;
        Ok(pg)
    }

    fn check_symmetry(&self) -> Result<()> {
        for (u, list) in self.neighbors.iter().enumerate() {
            if self.diag[u] < 0.0 {
                return Err(Error::Domain(format!("diagonal {u} is negative")));
            }
            for &(v, q) in list {
                let back = self.neighbors[v]
                    .iter()
                    .find(|&&(w, _)| w == u)
                    .ok_or_else(|| {
                        Error::Domain(format!("neighbor support asymmetric at ({u}, {v})"))
                    })?;
                if (back.1 - q.conj()).norm() > 1e-9 * q.norm().max(1.0) {
                    return Err(Error::Domain(format!(
                        "Q[{v},{u}] is not the conjugate of Q[{u},{v}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.neighbors.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn matched(&self) -> &[Complex64] {
        &self.r
    }

    /// Sorted `(column, Q[u,col])` neighbor list of row `u`.
    pub fn neighbors(&self, u: usize) -> &[(usize, Complex64)] {
        &self.neighbors[u]
    }

    /// Total directed edge count, `sum_u |neighbors(u)|`.
    pub fn directed_edges(&self) -> usize {
        self.neighbors.iter().map(|l| l.len()).sum()
    }

    /// Coupling `Q[u,v]`; `v` must be a neighbor of `u`.
    pub fn coupling(&self, u: usize, v: usize) -> Complex64 {
        self.neighbors[u]
            .iter()
            .find(|&&(w, _)| w == v)
            .unwrap_or_else(|| panic!("{v} is not a pruned neighbor of {u}"))
            .1
    }
}

/// Row-zero offset selection: strongest `n_i` by magnitude (ties to the
/// smaller linear offset), restricted to negation-closed pairs.
fn select_offsets(gram: &Gram, n_i: usize) -> Vec<(usize, usize, Complex64)> {
    let (n, m) = (gram.n_doppler, gram.m_delay);
    let mut ranked: Vec<&(usize, usize, Complex64)> = gram.offsets.iter().collect();
    ranked.sort_by(|a, b| {
        b.2.norm_sqr()
            .partial_cmp(&a.2.norm_sqr())
            .unwrap()
            .then((a.0 * m + a.1).cmp(&(b.0 * m + b.1)))
    });
    ranked.truncate(n_i);
    let chosen: std::collections::BTreeSet<(usize, usize)> =
        ranked.iter().map(|&&(dk, dl, _)| (dk, dl)).collect();
    let mut kept: Vec<(usize, usize, Complex64)> = ranked
        .into_iter()
        .filter(|&&(dk, dl, _)| chosen.contains(&((n - dk) % n, (m - dl) % m)))
        .copied()
        .collect();
    kept.sort_by_key(|&(dk, dl, _)| dk * m + dl);
    kept
}

/// Top `n_i` entries of one row by magnitude, ties to the smaller column.
pub(crate) fn top_entries(row: &[(usize, Complex64)], n_i: usize) -> Vec<(usize, Complex64)> {
    let mut sorted = row.to_vec();
    sorted.sort_by(|a, b| {
        b.1.norm_sqr()
            .partial_cmp(&a.1.norm_sqr())
            .unwrap()
            .then(a.0.cmp(&b.0))
    });
    sorted.truncate(n_i);
    sorted
}
