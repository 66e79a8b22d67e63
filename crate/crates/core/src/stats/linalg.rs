use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{DtaError, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-10;

/// Symmetric positive (semi-)definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymPosDef {
    m: DMatrix<f64>,
    semidefinite: bool,
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (m - m.transpose()).amax() / scale
}

impl SymPosDef {
    /// Strictly positive definite matrix; fails on asymmetry or a nonpositive eigenvalue.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::checked(m, false)
    }

    /// Positive semi-definite matrix; eigenvalues down to `-1e-10 λ_max` are accepted.
    pub fn new_semidefinite(m: DMatrix<f64>) -> Result<Self> {
        Self::checked(m, true)
    }

    fn checked(m: DMatrix<f64>, semidefinite: bool) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(DtaError::InvalidInput(format!(
                "expected a nonempty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = asymmetry(&m);
        if asym > SYMMETRY_TOL {
            return Err(DtaError::NotSymmetric { asymmetry: asym });
        }
        let m = symmetrize(&m);
        let eig = m.clone().symmetric_eigenvalues();
        let max = eig.max();
        let min = eig.min();
        let ok = if semidefinite { min >= -EIGEN_TOL * max.abs() } else { min > 0.0 };
        if !ok || !min.is_finite() {
            return Err(DtaError::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(Self { m, semidefinite })
    }

    pub fn identity(p: usize) -> Self {
        Self { m: DMatrix::identity(p, p), semidefinite: false }
    }

    pub fn zeros(p: usize) -> Self {
        Self { m: DMatrix::zeros(p, p), semidefinite: true }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_semidefinite(&self) -> bool {
        self.semidefinite
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }
}

impl AsRef<DMatrix<f64>> for SymPosDef {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.m
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Lower Cholesky factor, or `None` when the matrix is not positive definite.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.l())
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.clone().cholesky().is_some()
}

pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m.clone().cholesky().ok_or(DtaError::Singular("spd_inverse"))?;
    Ok(symmetrize(&chol.inverse()))
}

/// Symmetric square root `S` with `S S = M`, via `M = Q Λ Qᵀ`, `S = Q Λ^½ Qᵀ`.
pub fn sym_sqrt(m: &SymPosDef) -> Result<SymPosDef> {
    let SymmetricEigen { eigenvectors: q, eigenvalues } = m.matrix().clone().symmetric_eigen();
    let max = eigenvalues.amax();
    let mut roots = eigenvalues.clone();
    for (r, &l) in roots.iter_mut().zip(eigenvalues.iter()) {
        if l < -EIGEN_TOL * max {
            return Err(DtaError::NotPositiveDefinite { min_eigenvalue: l });
        }
        *r = l.max(0.0).sqrt();
    }
    let s = &q * DMatrix::from_diagonal(&roots) * q.transpose();
    Ok(SymPosDef { m: symmetrize(&s), semidefinite: m.semidefinite })
}
