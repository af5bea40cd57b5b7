//! Minimal dense matrix support: row-major storage, matrix-vector products,
//! an LU-based log-determinant, and a power-iteration spectral bound. Enough
//! for the solver and the criteria; anything heavier belongs elsewhere.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
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
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), v);
        }
        out
    }

    /// `self^T * v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            let row = self.row(i);
            if vi != 0.0 {
                for (o, &x) in out.iter_mut().zip(row) {
                    *o += vi * x;
                }
            }
        }
        out
    }

    /// Log-determinant via LU with partial pivoting. Fails unless the
    /// determinant is strictly positive and finite.
    pub fn log_det(&self) -> Result<f64> {
        if self.rows != self.cols {
            return Err(Error::Dimension {
                expected: self.rows,
                got: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut sign = 1.0f64;
        let mut log_abs = 0.0f64;
        for k in 0..n {
            // pivot search
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::IndefiniteCurvature);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                sign = -sign;
            }
            let piv = a[k * n + k];
            if piv < 0.0 {
                sign = -sign;
            }
            log_abs += math::ln(piv.abs());
            for i in (k + 1)..n {
                let factor = a[i * n + k] / piv;
                a[i * n + k] = factor;
                for j in (k + 1)..n {
                    a[i * n + j] -= factor * a[k * n + j];
                }
            }
        }
        if sign <= 0.0 || !log_abs.is_finite() {
            return Err(Error::IndefiniteCurvature);
        }
        Ok(log_abs)
    }

    /// Upper estimate of the largest eigenvalue of `self^T self` by power
    /// iteration with a deterministic start vector.
    pub fn gram_spectral_bound(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let p = self.cols;
        let mut v: Vec<f64> = (0..p)
            .map(|j| 1.0 + 0.5 * ((j % 7) as f64) / 7.0)
            .collect();
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..60 {
            let xv = self.matvec(&v);
            let mut w = self.tr_matvec(&xv);
            let norm = math::sqrt(dot(&w, &w));
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            for x in w.iter_mut() {
                *x /= norm;
            }
            v = w;
        }
        // small slack: power iteration converges from below
        lambda * 1.05
    }
}

fn normalize(v: &mut [f64]) {
    let norm = math::sqrt(dot(v, v));
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}
