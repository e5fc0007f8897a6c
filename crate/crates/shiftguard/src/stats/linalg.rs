//! Dense Cholesky factorization for small covariance matrices.
//!
//! The window sizes used by the chart are at most a few hundred, so a plain
//! O(K³) factorization with explicit pivot checks is all that is needed. The
//! factor is kept in full row-major storage for simple indexing.

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor L with Σ = L Lᵀ.
#[derive(Clone, Debug)]
pub struct CovarianceFactor {
    dim: usize,
    /// Row-major `dim × dim` storage; entries above the diagonal are zero.
    l: Vec<f64>,
}

impl CovarianceFactor {
    /// Matrix dimension K.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry L[i, j] (zero above the diagonal).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    /// Computes y = L z in place of a fresh vector.
    pub fn multiply(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim, "dimension mismatch");
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.entry(i, j) * z[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Solves L y = b by forward substitution. With Σ = L Lᵀ this gives the
    /// quadratic form bᵀ Σ⁻¹ b = ‖y‖².
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim, "dimension mismatch");
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.entry(i, j) * y[j];
            }
            y[i] = acc / self.entry(i, i);
        }
        y
    }

    /// Reconstructs L Lᵀ (row-major), mainly for verification.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..=i.min(j) {
                    acc += self.entry(i, k) * self.entry(j, k);
                }
                m[i * n + j] = acc;
            }
        }
        m
    }
}

/// Factors a symmetric positive-definite matrix (row-major, `dim × dim`).
///
/// Symmetry is checked to an absolute tolerance of `1e-12 · max(1, ‖Σ‖_max)`;
/// a pivot at or below `1e-12 ·` (largest diagonal entry) fails the
/// factorization as not positive definite.
pub fn cholesky(sigma: &[f64], dim: usize) -> Result<CovarianceFactor> {
    if dim == 0 || sigma.len() != dim * dim {
        return Err(Error::InvalidParameter(format!(
            "cholesky: expected a {dim}×{dim} matrix, got {} entries",
            sigma.len()
        )));
    }
    let max_abs = sigma.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sym_tol = 1e-12 * max_abs.max(1.0);
    for i in 0..dim {
        for j in (i + 1)..dim {
            if (sigma[i * dim + j] - sigma[j * dim + i]).abs() > sym_tol {
                return Err(Error::InvalidParameter(format!(
                    "cholesky: matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let max_diag = (0..dim).fold(0.0f64, |m, i| m.max(sigma[i * dim + i]));
    let pivot_tol = 1e-12 * max_diag;

    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut acc = sigma[i * dim + j];
            for k in 0..j {
                acc -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if acc <= pivot_tol {
                    return Err(Error::NotPositiveDefinite {
                        index: i,
                        pivot: acc,
                    });
                }
                l[i * dim + j] = acc.sqrt();
            } else {
                l[i * dim + j] = acc / l[j * dim + j];
            }
        }
    }
    Ok(CovarianceFactor { dim, l })
}
