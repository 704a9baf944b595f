//! Minimal compressed-row complex matrix.
//!
//! Rows keep their column indices sorted ascending so iteration order is
//! deterministic. Only the operations the channel and detectors need are
//! provided: matrix-vector product, conjugated left product, row access
//! and densification for small oracle checks.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sparse complex matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Assemble from per-row `(column, value)` lists. Each row is sorted
    /// by column; duplicate columns within a row are rejected.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Result<Self> {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            for pair in row.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(Error::Dimension(format!(
                        "duplicate column {} in row {r}",
                        pair[0].0
                    )));
                }
            }
            for (c, v) in row {
                if c >= ncols {
                    return Err(Error::Dimension(format!(
                        "column {c} out of bounds in row {r}"
                    )));
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Sorted `(column, value)` pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        span.map(move |i| (self.col_idx[i], self.values[i]))
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.ncols {
            return Err(Error::Dimension(format!(
                "matvec: matrix is {}x{}, vector has length {}",
                self.nrows,
                self.ncols,
                x.len()
            )));
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        for r in 0..self.nrows {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[i] * x[self.col_idx[i]];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    /// `r = y^H A`, returned as a plain vector with `r[u] = sum_w conj(y[w]) A[w,u]`.
    pub fn conj_left_mul(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.nrows {
            return Err(Error::Dimension(format!(
                "conj_left_mul: matrix is {}x{}, vector has length {}",
                self.nrows,
                self.ncols,
                y.len()
            )));
        }
        let mut r = vec![Complex64::new(0.0, 0.0); self.ncols];
        for w in 0..self.nrows {
            let yc = y[w].conj();
            for i in self.row_ptr[w]..self.row_ptr[w + 1] {
                r[self.col_idx[i]] += yc * self.values[i];
            }
        }
        Ok(r)
    }

    /// Dense row-major copy; meant for small instances in tests and oracles.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut dense = vec![Complex64::new(0.0, 0.0); self.nrows * self.ncols];
        for r in 0..self.nrows {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                dense[r * self.ncols + self.col_idx[i]] = self.values[i];
            }
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matvec_matches_dense() {
        let a = CsrMatrix::from_rows(
            3,
            vec![
                vec![(2, c(1.0, 1.0)), (0, c(2.0, 0.0))],
                vec![],
                vec![(1, c(0.0, -1.0))],
            ],
        )
        .unwrap();
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, -1.0)];
        let y = a.matvec(&x).unwrap();
        assert_eq!(y[0], c(2.0, 0.0) + c(1.0, 1.0) * c(1.0, -1.0));
        assert_eq!(y[1], c(0.0, 0.0));
        assert_eq!(y[2], c(0.0, -1.0) * c(0.0, 1.0));
    }

    #[test]
    fn conj_left_mul_is_adjoint_product() {
        let a = CsrMatrix::from_rows(
            2,
            vec![vec![(0, c(1.0, 2.0)), (1, c(-1.0, 0.5))], vec![(1, c(0.0, 3.0))]],
        )
        .unwrap();
        let y = vec![c(1.0, -1.0), c(2.0, 0.0)];
        let r = a.conj_left_mul(&y).unwrap();
        let dense = a.to_dense();
        for u in 0..2 {
            let mut expect = c(0.0, 0.0);
            for w in 0..2 {
                expect += y[w].conj() * dense[w * 2 + u];
            }
            assert!((r[u] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_duplicates_and_out_of_bounds() {
        assert!(CsrMatrix::from_rows(2, vec![vec![(0, c(1.0, 0.0)), (0, c(2.0, 0.0))]]).is_err());
        assert!(CsrMatrix::from_rows(2, vec![vec![(5, c(1.0, 0.0))]]).is_err());
    }

    #[test]
    fn rows_iterate_sorted() {
        let a = CsrMatrix::from_rows(
            4,
            vec![vec![(3, c(3.0, 0.0)), (1, c(1.0, 0.0)), (2, c(2.0, 0.0))]],
        )
        .unwrap();
        let cols: Vec<usize> = a.row(0).map(|(c, _)| c).collect();
        assert_eq!(cols, vec![1, 2, 3]);
    }
}
