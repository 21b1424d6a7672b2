//! Real symmetric band storage.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A real symmetric matrix stored by its lower band.
///
/// Only one triangle is stored, so the matrix is symmetric bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBandMatrix {
    n: usize,
    bandwidth: usize,
    // row i holds entries (i, i), (i, i - 1), ..., (i, i - bandwidth)
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bandwidth = bandwidth.min(n.saturating_sub(1));
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), 0);
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        m
    }

    /// Tridiagonal matrix with diagonal `diag` and off-diagonal `off`.
    pub fn tridiagonal(diag: &[f64], off: &[f64]) -> Result<Self> {
        if diag.len() != off.len() + 1 {
            return Err(Error::DimensionMismatch {
                expected: diag.len().saturating_sub(1),
                got: off.len(),
            });
        }
        let mut m = Self::zeros(diag.len(), 1);
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        for (i, e) in off.iter().enumerate() {
            m.set(i + 1, i, *e);
        }
        Ok(m)
    }

    /// Reads the lower triangle of `dense`, keeping entries within `bandwidth`.
    pub fn from_dense(dense: &DMatrix<f64>, bandwidth: usize) -> Result<Self> {
        if dense.nrows() != dense.ncols() {
            return Err(Error::DimensionMismatch {
                expected: dense.nrows(),
                got: dense.ncols(),
            });
        }
        let n = dense.nrows();
        let mut m = Self::zeros(n, bandwidth);
        for i in 0..n {
            for j in i.saturating_sub(m.bandwidth)..=i {
                m.set(i, j, dense[(i, j)]);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn is_tridiagonal(&self) -> bool {
        self.bandwidth <= 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        (k <= self.bandwidth && hi < self.n).then(|| hi * (self.bandwidth + 1) + k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Sets `(i, j)` and `(j, i)`.
    ///
    /// # Panics
    /// If the entry lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside the band"));
        self.data[s] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside the band"));
        self.data[s] += value;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Sub-diagonal `(i + 1, i)`; only meaningful for tridiagonal matrices.
    pub fn off_diagonal(&self) -> Vec<f64> {
        (1..self.n).map(|i| self.get(i, i - 1)).collect()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let mut rows = vec![0.0f64; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.bandwidth)..=i {
                let v = self.get(i, j).abs();
                rows[i] += v;
                if j != i {
                    rows[j] += v;
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}
