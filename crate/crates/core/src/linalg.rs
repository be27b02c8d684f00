//! Symmetric matrix functions through the symmetric eigendecomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted as positive definite. Anything at or below makes
/// the matrix an invalid SPD point rather than being clamped.
pub const EIGEN_FLOOR: f64 = 1e-14;

/// Eigendecomposition `V diag(λ) Vᵀ` of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// Decomposes the symmetric part of `m`.
    pub fn new(m: &DMatrix<f64>) -> Self {
        let eig = symmetrize(m).symmetric_eigen();
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.min()
    }

    pub fn max_value(&self) -> f64 {
        self.values.max()
    }

    /// `V diag(f(λ)) Vᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    /// Fails unless every eigenvalue exceeds [`EIGEN_FLOOR`].
    pub fn require_positive(&self, what: &str) -> Result<()> {
        let min = self.min_value();
        if !(min > EIGEN_FLOOR) || !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "{what}: smallest eigenvalue {min:e} is not above {EIGEN_FLOOR:e}"
            )));
        }
        Ok(())
    }
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest entry of `|M - Mᵀ|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn sym_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    SymEigen::new(m).map(f64::exp)
}

/// Principal logarithm of an SPD matrix.
pub fn sym_log(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymEigen::new(m);
    eig.require_positive("matrix logarithm")?;
    Ok(eig.map(f64::ln))
}

/// Principal square root of an SPD matrix.
pub fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymEigen::new(m);
    eig.require_positive("matrix square root")?;
    Ok(eig.map(f64::sqrt))
}

/// Frobenius inner product `tr(Aᵀ B)`.
pub fn frobenius_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
