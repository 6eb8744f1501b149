//! Small dense linear-algebra helpers over `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * (1.0 + m[(i, j)].abs())))
}

/// Matrix exponential. Symmetric input goes through the eigendecomposition;
/// everything else uses nalgebra's Pade scaling-and-squaring.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    if is_symmetric(m, 1e-14) {
        let eig = m.clone().symmetric_eigen();
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp));
        &eig.eigenvectors * d * eig.eigenvectors.transpose()
    } else {
        m.exp()
    }
}

/// Smallest real part over the eigenvalues of a square matrix.
pub fn min_eigen_real_part(m: &DMatrix<f64>) -> f64 {
    if is_symmetric(m, 1e-14) {
        m.clone().symmetric_eigen().eigenvalues.min()
    } else {
        m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }
}

/// Largest real part over the eigenvalues of a square matrix.
pub fn max_eigen_real_part(m: &DMatrix<f64>) -> f64 {
    if is_symmetric(m, 1e-14) {
        m.clone().symmetric_eigen().eigenvalues.max()
    } else {
        m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Largest modulus over the eigenvalues.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Operator 2-norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

pub fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{}x{} matrix is not invertible", m.nrows(), m.ncols())))
}

pub fn all_finite_matrix(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}
