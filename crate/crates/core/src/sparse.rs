//! Compressed sparse row matrices and the handful of kernels the pipeline needs.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major sparse matrix with sorted, duplicate-free column indices per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from per-row `(column, value)` lists.
    ///
    /// Entries within a row may arrive in any order; they are sorted by column.
    /// Duplicate columns, out-of-range columns and non-finite values are rejected.
    /// Explicit zeros are kept so that round trips preserve the stored layout.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            for (k, &(c, v)) in row.iter().enumerate() {
                if c >= ncols {
                    return Err(Error::InvalidGraph(format!(
                        "row {r}: feature index {c} out of range (dim {ncols})"
                    )));
                }
                if k > 0 && row[k - 1].0 == c {
                    return Err(Error::InvalidGraph(format!("row {r}: duplicate feature index {c}")));
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Sparse copy of a dense matrix; exact zeros are dropped.
    pub fn from_dense(dense: ArrayView2<'_, f64>) -> Self {
        let (nrows, ncols) = dense.dim();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in dense.rows() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
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

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_iter(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (idx, val) = self.row(r);
        idx.iter().copied().zip(val.iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for r in 0..self.nrows {
            for (c, v) in self.row_iter(r) {
                out[[r, c]] = v;
            }
        }
        out
    }

    /// Dense copy of a subset of rows, in the given order.
    pub fn dense_rows(&self, rows: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((rows.len(), self.ncols));
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row_iter(r) {
                out[[i, c]] = v;
            }
        }
        out
    }

    /// Appends the rows of `other` below `self`. Column counts must agree.
    pub fn vstack(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if other.ncols != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                actual: other.ncols,
                context: "stacked feature rows".into(),
            });
        }
        let mut indptr = self.indptr.clone();
        let base = self.nnz();
        indptr.extend(other.indptr[1..].iter().map(|&p| p + base));
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(CsrMatrix {
            nrows: self.nrows + other.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Each row divided by its sum; all-zero rows are left untouched.
    pub fn row_normalized(&self) -> CsrMatrix {
        let mut out = self.clone();
        for r in 0..self.nrows {
            let (s, e) = (self.indptr[r], self.indptr[r + 1]);
            let sum: f64 = self.values[s..e].iter().sum();
            if sum != 0.0 {
                for v in &mut out.values[s..e] {
                    *v /= sum;
                }
            }
        }
        out
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(self.ncols, rhs.nrows(), "sparse matmul dimension mismatch");
        let k = rhs.ncols();
        let mut out = Array2::zeros((self.nrows, k));
        for r in 0..self.nrows {
            let mut orow = out.row_mut(r);
            for (c, v) in self.row_iter(r) {
                orow.scaled_add(v, &rhs.row(c));
            }
        }
        out
    }

    /// `selfᵀ · rhs` without materialising the transpose.
    pub fn t_matmul(&self, rhs: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(self.nrows, rhs.nrows(), "sparse t_matmul dimension mismatch");
        let k = rhs.ncols();
        let mut out = Array2::zeros((self.ncols, k));
        for r in 0..self.nrows {
            let rrow = rhs.row(r);
            for (c, v) in self.row_iter(r) {
                out.row_mut(c).scaled_add(v, &rrow);
            }
        }
        out
    }

    /// Same sparsity pattern with every stored value mapped through `f(row, col, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> CsrMatrix {
        let mut out = self.clone();
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out.values[k] = f(r, self.indices[k], self.values[k]);
            }
        }
        out
    }

    pub(crate) fn from_parts(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(indptr.len(), nrows + 1);
        debug_assert_eq!(indices.len(), values.len());
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }
}
