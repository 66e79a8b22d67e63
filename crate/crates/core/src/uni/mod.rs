//! Univariate heteroscedastic linear mixed model
//! `y_i | θ_i ~ N(θ_i, V_i)`, `θ_i | A, β ~ N(x_iᵀβ, A)` with known `V_i`
//! and the flat prior `p(A, β) ∝ 1{A > 0}`.

mod em;
mod gibbs;
mod oracle;

pub use em::run_em_uni;
pub use gibbs::run_gibbs_uni;
pub(crate) use oracle::check_grid;
pub use oracle::{grid_oracle_a, GridDensity};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{DtaError, Result};
use crate::stats::{standard_normal, RngStream};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Observed univariate dataset.
#[derive(Debug, Clone)]
pub struct UniData {
    y: DVector<f64>,
    v: DVector<f64>,
    x: DMatrix<f64>,
    xtx: Cholesky<f64, Dyn>,
    weights: DtaWeights,
}

impl UniData {
    /// Validates `k ≥ m + 3`, positive `V_i` and a full-column-rank design.
    pub fn new(y: Vec<f64>, v: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        let k = y.len();
        if v.len() != k || x.nrows() != k {
            return Err(DtaError::InvalidInput(format!(
                "length mismatch: {} responses, {} variances, {} design rows",
                k,
                v.len(),
                x.nrows()
            )));
        }
        let m = x.ncols();
        if m == 0 {
            return Err(DtaError::InvalidInput("design matrix has no columns".into()));
        }
        if k < m + 3 {
            return Err(DtaError::Propriety { requirement: format!("k >= m + 3 = {}", m + 3), k });
        }
        if y.iter().chain(x.iter()).any(|z| !z.is_finite()) {
            return Err(DtaError::InvalidInput("non-finite response or covariate".into()));
        }
        let weights = dta_weights(&v)?;
        let gram = x.transpose() * &x;
        let eig = gram.clone().symmetric_eigenvalues();
        if !(eig.min() > 1e-12 * eig.max()) {
            return Err(DtaError::InvalidInput("design matrix is not of full column rank".into()));
        }
        let xtx = gram.cholesky().ok_or(DtaError::Singular("XᵀX"))?;
        Ok(Self { y: DVector::from_vec(y), v: DVector::from_vec(v), x, xtx, weights })
    }

    /// Intercept-only design `x_i = 1`.
    pub fn intercept_only(y: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let k = y.len();
        Self::new(y, v, DMatrix::from_element(k, 1, 1.0))
    }

    pub fn k(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn weights(&self) -> &DtaWeights {
        &self.weights
    }

    pub fn vmin(&self) -> f64 {
        self.weights.vmin
    }

    /// `x_iᵀβ` for every group.
    pub fn fitted(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.x * beta
    }

    /// Least-squares coefficients `(XᵀX)⁻¹Xᵀ z`.
    pub(crate) fn ols(&self, z: &DVector<f64>) -> DVector<f64> {
        self.xtx.solve(&(self.x.transpose() * z))
    }

    /// Lower Cholesky factor of `XᵀX`.
    pub(crate) fn xtx_chol(&self) -> DMatrix<f64> {
        self.xtx.l()
    }
}

/// Regression coefficients and random-effect variance.
#[derive(Debug, Clone, PartialEq)]
pub struct UniParams {
    pub beta: DVector<f64>,
    pub a: f64,
}

impl UniParams {
    pub fn new(beta: Vec<f64>, a: f64) -> Self {
        Self { beta: DVector::from_vec(beta), a }
    }

    /// Largest absolute componentwise difference over `(β, A)`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.beta - &other.beta).amax().max((self.a - other.a).abs())
    }
}

/// Convex-combination weights `w_i = 1 - V_min / V_i` of the homoscedastic transform.
#[derive(Debug, Clone, PartialEq)]
pub struct DtaWeights {
    pub vmin: f64,
    pub w: DVector<f64>,
}

pub fn dta_weights(v: &[f64]) -> Result<DtaWeights> {
    if v.is_empty() {
        return Err(DtaError::Empty("variance vector"));
    }
    if let Some(i) = v.iter().position(|&vi| !(vi > 0.0 && vi.is_finite())) {
        return Err(DtaError::InvalidInput(format!(
            "variance {} at index {i} is not positive",
            v[i]
        )));
    }
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let w = v.iter().map(|&vi| if vi == vmin { 0.0 } else { 1.0 - vmin / vi }).collect();
    Ok(DtaWeights { vmin, w: DVector::from_vec(w) })
}

/// Mean and variance of `[y_i^aug | y_i^obs, A, β]` under the homoscedastic transform:
/// `μ*_i = (1 - w_i B_i) y_i + w_i B_i x_iᵀβ`, `v*_i = w_i V_min + w_i² V_i (1 - B_i)`
/// with `B_i = V_i / (V_i + A)`.
pub fn dta_aug_moments(data: &UniData, params: &UniParams) -> (DVector<f64>, DVector<f64>) {
    let fitted = data.fitted(&params.beta);
    let vmin = data.vmin();
    let k = data.k();
    let mut mu = DVector::zeros(k);
    let mut var = DVector::zeros(k);
    for i in 0..k {
        let (vi, wi) = (data.v[i], data.weights.w[i]);
        let b = vi / (vi + params.a);
        mu[i] = (1.0 - wi * b) * data.y[i] + wi * b * fitted[i];
        var[i] = wi * vmin + wi * wi * vi * (1.0 - b);
    }
    (mu, var)
}

/// Draws `y_i^mis ~ N(θ_i, V_min / w_i)`. Groups with `w_i = 0` get `θ_i`,
/// which [`transform_uni`] ignores.
pub fn sample_missing_uni(weights: &DtaWeights, theta: &DVector<f64>, rng: &mut RngStream) -> DVector<f64> {
    DVector::from_fn(theta.len(), |i, _| {
        let w = weights.w[i];
        if w == 0.0 {
            theta[i]
        } else {
            theta[i] + (weights.vmin / w).sqrt() * standard_normal(rng)
        }
    })
}

/// `y_i^aug = (1 - w_i) y_i^obs + w_i y_i^mis`, so that `y_i^aug | θ_i ~ N(θ_i, V_min)`.
pub fn transform_uni(weights: &DtaWeights, y_obs: &DVector<f64>, y_mis: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(y_obs.len(), |i, _| {
        let w = weights.w[i];
        (1.0 - w) * y_obs[i] + w * y_mis[i]
    })
}

/// Mean and variance of `[θ_i | y_i^obs, A, β]`:
/// `(1 - B_i) y_i + B_i x_iᵀβ` and `V_i (1 - B_i)`.
pub fn da_moments(data: &UniData, params: &UniParams) -> (DVector<f64>, DVector<f64>) {
    let fitted = data.fitted(&params.beta);
    let k = data.k();
    let mut mu = DVector::zeros(k);
    let mut var = DVector::zeros(k);
    for i in 0..k {
        let vi = data.v[i];
        let b = vi / (vi + params.a);
        mu[i] = (1.0 - b) * data.y[i] + b * fitted[i];
        var[i] = vi * (1.0 - b);
    }
    (mu, var)
}

/// Observed-data log-likelihood `Σ log N(y_i; x_iᵀβ, A + V_i)`.
pub fn loglik_obs_uni(data: &UniData, params: &UniParams) -> f64 {
    let fitted = data.fitted(&params.beta);
    data.y
        .iter()
        .zip(data.v.iter())
        .zip(fitted.iter())
        .map(|((&y, &v), &f)| {
            let s = params.a + v;
            -0.5 * (LN_2PI + s.ln() + (y - f).powi(2) / s)
        })
        .sum()
}
