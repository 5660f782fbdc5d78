use alloc::vec;
use alloc::vec::Vec;

use matrixmultiply::dgemm;

use crate::{Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("matrix buffer", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows. An empty slice gives a `0 x 0` matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dims("matrix row", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a `rows x columns.len()` matrix from columns.
    pub fn from_columns(rows: usize, columns: &[&[f64]]) -> Result<Self> {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::dims("matrix column", rows, c.len()));
            }
            for (i, v) in c.iter().enumerate() {
                m.data[i * cols + j] = *v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }
}

/// `out[n, o] = bias[o] + Σ_i w[o, i] · x[n, i]`, with `w` stored `outputs x inputs`.
pub(crate) fn affine(x: &Matrix, w: &[f64], bias: &[f64]) -> Matrix {
    let (rows, inputs, outputs) = (x.rows(), x.cols(), bias.len());
    assert_eq!(w.len(), inputs * outputs);
    let mut out = Matrix::zeros(rows, outputs);
    for r in 0..rows {
        out.row_mut(r).copy_from_slice(bias);
    }
    // SAFETY: the strides describe x (rows x inputs), wᵀ (inputs x outputs)
    // and out (rows x outputs) within their allocations.
    unsafe {
        dgemm(
            rows, inputs, outputs, 1.0,
            x.as_slice().as_ptr(), inputs as isize, 1,
            w.as_ptr(), 1, inputs as isize,
            1.0,
            out.as_mut_slice().as_mut_ptr(), outputs as isize, 1,
        );
    }
    out
}

/// `dw[o, i] += Σ_n dz[n, o] · x[n, i]`
pub(crate) fn accumulate_outer(dz: &Matrix, x: &Matrix, dw: &mut [f64]) {
    let (rows, inputs, outputs) = (x.rows(), x.cols(), dz.cols());
    assert!(dz.rows() == rows && dw.len() == inputs * outputs);
    // SAFETY: dzᵀ is (outputs x rows), x is (rows x inputs), dw is (outputs x inputs).
    unsafe {
        dgemm(
            outputs, rows, inputs, 1.0,
            dz.as_slice().as_ptr(), 1, outputs as isize,
            x.as_slice().as_ptr(), inputs as isize, 1,
            1.0,
            dw.as_mut_ptr(), inputs as isize, 1,
        );
    }
}

/// `dx[n, i] = Σ_o dz[n, o] · w[o, i]`
pub(crate) fn backprop_input(dz: &Matrix, w: &[f64], inputs: usize) -> Matrix {
    let (rows, outputs) = (dz.rows(), dz.cols());
    assert_eq!(w.len(), inputs * outputs);
    let mut dx = Matrix::zeros(rows, inputs);
    // SAFETY: dz is (rows x outputs), w is (outputs x inputs), dx is (rows x inputs).
    unsafe {
        dgemm(
            rows, outputs, inputs, 1.0,
            dz.as_slice().as_ptr(), outputs as isize, 1,
            w.as_ptr(), inputs as isize, 1,
            0.0,
            dx.as_mut_slice().as_mut_ptr(), inputs as isize, 1,
        );
    }
    dx
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_matches_hand_product() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [-1.0, 0.5]]).unwrap();
        let w = [0.5, -1.0, 2.0, 0.25, 0.0, 1.0];
        let b = [0.1, 0.2, 0.3];
        let out = affine(&x, &w, &b);
        assert_eq!(out.row(0), &[0.1 + 0.5 - 2.0, 0.2 + 2.0 + 0.5, 0.3 + 2.0]);
        assert_eq!(out.row(1), &[0.1 - 0.5 - 0.5, 0.2 - 2.0 + 0.125, 0.3 + 0.5]);
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: [&[f64]; 2] = [&[1.0, 2.0], &[3.0]];
        assert!(Matrix::from_rows(&rows).is_err());
    }
}
