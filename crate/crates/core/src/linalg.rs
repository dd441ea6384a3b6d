//! Dense real matrices and Moore-Penrose pseudo-inverses.
//!
//! Everything at desk scale fits in a row-major `Vec<f64>`; there is no
//! sparse type. Pseudo-inverses go through an SVD with a relative
//! singular-value cutoff so that rank-deficient score matrices are handled
//! without special cases.

use crate::error::{DashError, Result};
use serde::{Deserialize, Serialize};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Build from row-major data, checking length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(DashError::contract(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(DashError::NonFinite {
                context: "matrix construction",
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(DashError::contract("ragged rows in matrix literal"));
        }
        DenseMatrix::new(r, c, rows.concat())
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        DenseMatrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn same_shape(&self, other: &DenseMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    fn shape_err(&self, other: &DenseMatrix, op: &'static str) -> DashError {
        DashError::Shape {
            op,
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Standard matrix product.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(self.shape_err(other, "matmul"));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let lhs_row = &self.data[i * k..(i + 1) * k];
            let out_row = &mut out[i * m..(i + 1) * m];
            for (l, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &other.data[l * m..(l + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        DenseMatrix::new(n, m, out)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if !self.same_shape(other) {
            return Err(self.shape_err(other, "add"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        DenseMatrix::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if !self.same_shape(other) {
            return Err(self.shape_err(other, "sub"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        DenseMatrix::new(self.rows, self.cols, data)
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if !self.same_shape(other) {
            return Err(self.shape_err(other, "hadamard"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        DenseMatrix::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn abs(&self) -> DenseMatrix {
        self.map(f64::abs)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

fn to_nalgebra(x: &DenseMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(x.rows(), x.cols(), x.data())
}

fn from_nalgebra(x: &nalgebra::DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)])
}

/// Moore-Penrose pseudo-inverse via SVD with relative cutoff
/// `tau = max(rows, cols) * sigma_max * 1e-12`.
///
/// For full column rank this equals `(X^T X)^-1 X^T`, for full row rank
/// `X^T (X X^T)^-1`; rank-deficient inputs fall back gracefully.
fn pinv(x: &DenseMatrix) -> DenseMatrix {
    let m = to_nalgebra(x);
    let svd = m.svd(true, true);
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let tau = x.rows().max(x.cols()) as f64 * sigma_max * 1e-12;
    let u = svd.u.as_ref().expect("svd requested u");
    let v_t = svd.v_t.as_ref().expect("svd requested v_t");
    // pinv(X) = V * S^+ * U^T
    let mut s_inv_ut = nalgebra::DMatrix::zeros(v_t.nrows(), u.nrows());
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s > tau {
            let row = u.column(idx).transpose() / s;
            s_inv_ut.set_row(idx, &row);
        }
    }
    let result = v_t.transpose() * s_inv_ut;
    from_nalgebra(&result)
}

/// Left pseudo-inverse: `(X^T X)^-1 X^T` in the full-column-rank case.
pub fn pinv_left(x: &DenseMatrix) -> DenseMatrix {
    pinv(x)
}

/// Right pseudo-inverse: `X^T (X X^T)^-1` in the full-row-rank case.
pub fn pinv_right(x: &DenseMatrix) -> DenseMatrix {
    pinv(x)
}
