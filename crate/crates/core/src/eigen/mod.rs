//! Symmetric eigensolvers.
//!
//! * [`tridiagonal`]: implicit QL, Sturm bisection and inverse iteration.
//! * [`dense`]: Householder + QL for small dense matrices.
//! * [`lanczos`]: restarted Lanczos for the lowest eigenpairs of large sparse
//!   operators.

pub mod dense;
pub mod lanczos;
pub mod tridiagonal;

use serde::Serialize;

use crate::sparse::SparseSymmetricOperator;

pub use dense::{symmetric_eigen, DenseEigen};
pub use lanczos::{extremal_sparse_eigs, FilterPolicy, LanczosOptions};
pub use tridiagonal::{dense_tridiagonal_eigs, lowest_tridiagonal_eigs, sturm_count, tridiagonal_eigenvalues};

/// Eigenpairs with residual certificates.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit-norm eigenvectors, one per eigenvalue.
    #[serde(skip)]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    /// `‖Av - θv‖/‖v‖` for each returned pair (empty without vectors).
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub matvecs: usize,
    pub converged: bool,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// `‖Av - θv‖ / ‖v‖`, computed from scratch.
pub fn residual_norm(a: &SparseSymmetricOperator, theta: f64, v: &[f64]) -> f64 {
    let mut av = a.mul_vec(v);
    crate::par::axpy(-theta, v, &mut av);
    crate::par::norm(&av) / crate::par::norm(v)
}
