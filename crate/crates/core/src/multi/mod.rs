//! Multivariate heteroscedastic linear mixed model
//! `y_i | θ_i ~ N_p(θ_i, V_i)`, `θ_i | A, β ~ N_p(X_iβ, A)` with
//! `X_i = I_p ⊗ x_iᵀ` and the flat prior `p(A, β) ∝ 1{|A| > 0}`.
//!
//! `β` has length `mp` and is stored as `p` consecutive blocks of `m`
//! coefficients, block `j` holding the regression for coordinate `j`.

mod em;
mod gibbs;

pub use em::run_em_multi;
pub use gibbs::run_gibbs_multi;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{DtaError, Result};
use crate::stats::{cholesky_lower, sample_mvn_degenerate, symmetrize, sym_sqrt, RngStream, SymPosDef};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Eigenvalues of `W_i` below this count as zero when flagging singular groups.
const SINGULAR_TOL: f64 = 1e-10;
const SAFE_MODE_FACTOR: f64 = 0.999;

/// Minimal-variance reference and per-group shrinkage matrices
/// `W_i = I - V_min^½ V_i⁻¹ V_min^½` with `V_min = λ_min I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkSet {
    pub vmin: DMatrix<f64>,
    pub vmin_sqrt: DMatrix<f64>,
    pub w: Vec<DMatrix<f64>>,
    /// Smallest eigenvalue over all `V_i` (before any safe-mode scaling).
    pub lambda_min: f64,
    /// `true` for groups whose `W_i` has a zero eigenvalue.
    pub singular: Vec<bool>,
    pub safe_mode: bool,
}

impl ShrinkSet {
    /// Scalar `c` with `V_min = c I`.
    pub fn vmin_scalar(&self) -> f64 {
        self.vmin[(0, 0)]
    }
}

pub fn shrink_matrices(v: &[SymPosDef], safe_mode: bool) -> Result<ShrinkSet> {
    let Some(first) = v.first() else {
        return Err(DtaError::Empty("covariance list"));
    };
    let p = first.dim();
    let mut lambda_min = f64::INFINITY;
    for vi in v {
        if vi.dim() != p {
            return Err(DtaError::InvalidInput("covariances differ in dimension".into()));
        }
        if vi.is_semidefinite() {
            return Err(DtaError::InvalidInput("measurement covariances must be positive definite".into()));
        }
        let min = vi.matrix().clone().symmetric_eigenvalues().min();
        if !(min > 0.0) {
            return Err(DtaError::NotPositiveDefinite { min_eigenvalue: min });
        }
        lambda_min = lambda_min.min(min);
    }
    let scale = if safe_mode { SAFE_MODE_FACTOR * lambda_min } else { lambda_min };
    let vmin_spd = SymPosDef::new(DMatrix::identity(p, p) * scale)?;
    let vmin_sqrt = sym_sqrt(&vmin_spd)?.into_matrix();
    let mut w = Vec::with_capacity(v.len());
    let mut singular = Vec::with_capacity(v.len());
    for vi in v {
        let inv = vi.matrix().clone().cholesky().ok_or(DtaError::Singular("V_i"))?.inverse();
        let wi = symmetrize(&(DMatrix::identity(p, p) - &vmin_sqrt * inv * &vmin_sqrt));
        let min = wi.clone().symmetric_eigenvalues().min();
        singular.push(min < SINGULAR_TOL);
        w.push(wi);
    }
    Ok(ShrinkSet { vmin: vmin_spd.into_matrix(), vmin_sqrt, w, lambda_min, singular, safe_mode })
}

/// Observed multivariate dataset.
#[derive(Debug, Clone)]
pub struct MultiData {
    y: Vec<DVector<f64>>,
    v: Vec<SymPosDef>,
    x: DMatrix<f64>,
    xtx: Cholesky<f64, Dyn>,
    shrink: ShrinkSet,
}

impl MultiData {
    /// Validates `k ≥ m + p + 2`, SPD `V_i` and a full-column-rank covariate matrix.
    pub fn new(y: Vec<DVector<f64>>, v: Vec<SymPosDef>, x: DMatrix<f64>) -> Result<Self> {
        let k = y.len();
        if k == 0 {
            return Err(DtaError::Empty("responses"));
        }
        if v.len() != k || x.nrows() != k {
            return Err(DtaError::InvalidInput(format!(
                "length mismatch: {} responses, {} covariances, {} covariate rows",
                k,
                v.len(),
                x.nrows()
            )));
        }
        let p = y[0].len();
        if p == 0 || y.iter().any(|yi| yi.len() != p) {
            return Err(DtaError::InvalidInput("responses must share a positive dimension".into()));
        }
        let m = x.ncols();
        if m == 0 {
            return Err(DtaError::InvalidInput("covariate matrix has no columns".into()));
        }
        if k < m + p + 2 {
            return Err(DtaError::Propriety {
                requirement: format!("k >= m + p + 2 = {}", m + p + 2),
                k,
            });
        }
        if y.iter().flat_map(|yi| yi.iter()).chain(x.iter()).any(|z| !z.is_finite()) {
            return Err(DtaError::InvalidInput("non-finite response or covariate".into()));
        }
        let shrink = shrink_matrices(&v, false)?;
        let gram = x.transpose() * &x;
        let eig = gram.clone().symmetric_eigenvalues();
        if !(eig.min() > 1e-12 * eig.max()) {
            return Err(DtaError::InvalidInput("covariate matrix is not of full column rank".into()));
        }
        let xtx = gram.cholesky().ok_or(DtaError::Singular("XᵀX"))?;
        Ok(Self { y, v, x, xtx, shrink })
    }

    /// `V_i = V_0 / n_i`.
    pub fn from_common_covariance(
        y: Vec<DVector<f64>>,
        v0: &SymPosDef,
        n: &[f64],
        x: DMatrix<f64>,
    ) -> Result<Self> {
        if n.iter().any(|&ni| !(ni > 0.0)) {
            return Err(DtaError::InvalidInput("group sizes must be positive".into()));
        }
        let v = n.iter().map(|&ni| SymPosDef::new(v0.matrix() / ni)).collect::<Result<Vec<_>>>()?;
        Self::new(y, v, x)
    }

    /// Rebuilds the shrinkage set with `V_min = 0.999 λ_min I` (or back to `λ_min I`).
    pub fn with_safe_mode(mut self, safe_mode: bool) -> Result<Self> {
        self.shrink = shrink_matrices(&self.v, safe_mode)?;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn p(&self) -> usize {
        self.y[0].len()
    }

    pub fn y(&self) -> &[DVector<f64>] {
        &self.y
    }

    pub fn v(&self) -> &[SymPosDef] {
        &self.v
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn shrink(&self) -> &ShrinkSet {
        &self.shrink
    }

    /// Explicit `p × mp` matrix `X_i = I_p ⊗ x_iᵀ`.
    pub fn design_block(&self, i: usize) -> DMatrix<f64> {
        let (p, m) = (self.p(), self.m());
        let mut out = DMatrix::zeros(p, m * p);
        for j in 0..p {
            for c in 0..m {
                out[(j, j * m + c)] = self.x[(i, c)];
            }
        }
        out
    }

    /// `X_iβ` without forming the Kronecker product.
    pub fn fitted(&self, i: usize, beta: &DVector<f64>) -> DVector<f64> {
        let m = self.m();
        let xi = self.x.row(i);
        DVector::from_fn(self.p(), |j, _| (xi * beta.rows(j * m, m))[(0, 0)])
    }

    /// Coefficient blocks as an `m × p` matrix, column `j` being block `j`.
    pub fn beta_matrix(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.m(), self.p(), beta.as_slice())
    }

    /// Responses stacked into a `k × p` matrix.
    pub(crate) fn stack(z: &[DVector<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(z.len(), z[0].len(), |i, j| z[i][j])
    }

    /// `(ΣX_iᵀX_i)⁻¹ΣX_iᵀz_i`, which is least squares coordinate by coordinate.
    /// Returns the `m × p` coefficient matrix.
    pub(crate) fn ols(&self, z: &[DVector<f64>]) -> DMatrix<f64> {
        self.xtx.solve(&(self.x.transpose() * Self::stack(z)))
    }

    pub(crate) fn xtx_chol(&self) -> DMatrix<f64> {
        self.xtx.l()
    }
}

/// Regression coefficients (length `mp`) and random-effect covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiParams {
    pub beta: DVector<f64>,
    pub a: SymPosDef,
}

impl MultiParams {
    pub fn new(beta: Vec<f64>, a: DMatrix<f64>) -> Result<Self> {
        Ok(Self { beta: DVector::from_vec(beta), a: SymPosDef::new_semidefinite(a)? })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.beta - &other.beta).amax().max((self.a.matrix() - other.a.matrix()).amax())
    }

    pub(crate) fn check(&self, data: &MultiData) -> Result<()> {
        if self.beta.len() != data.m() * data.p() || self.a.dim() != data.p() {
            return Err(DtaError::InvalidInput("parameters do not fit the data dimensions".into()));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(DtaError::InvalidInput("non-finite coefficient".into()));
        }
        Ok(())
    }
}

/// `(I - B_i, (I - B_i) V_i)` with `B_i = V_i (V_i + A)⁻¹`.
fn shrinkage(vi: &DMatrix<f64>, a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = vi.nrows();
    let total = symmetrize(&(vi + a));
    let chol = total.cholesky().expect("V_i + A is positive definite");
    // Bᵀ = (V + A)⁻¹ V.
    let b = chol.solve(vi).transpose();
    let one_minus_b = DMatrix::identity(p, p) - &b;
    let cov = symmetrize(&(&one_minus_b * vi));
    (one_minus_b, cov)
}

/// Mean and covariance of `[y_i^aug | y_i^obs, A, β]`:
/// `μ*_i = (I - W_iB_i) y_i + W_iB_i X_iβ`,
/// `Cov*_i = V_min W_iᵀ + W_i (I - B_i) V_i W_iᵀ` (symmetrized).
pub fn dta_aug_moments_multi(
    data: &MultiData,
    params: &MultiParams,
) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
    let shrink = data.shrink();
    let p = data.p();
    let mut mu = Vec::with_capacity(data.k());
    let mut cov = Vec::with_capacity(data.k());
    for i in 0..data.k() {
        let wi = &shrink.w[i];
        let (one_minus_b, post_cov) = shrinkage(data.v[i].matrix(), params.a.matrix());
        let wb = wi * (DMatrix::identity(p, p) - one_minus_b);
        let fitted = data.fitted(i, &params.beta);
        mu.push(&data.y[i] - &wb * &data.y[i] + &wb * fitted);
        let c = &shrink.vmin * wi.transpose() + wi * post_cov * wi.transpose();
        cov.push(symmetrize(&c));
    }
    (mu, cov)
}

/// Draws `W_i y_i^mis` as `W_i θ_i + e_i` with `e_i ~ N(0, λ W_i)`, where
/// `V_min = λ I`. Only this product enters [`transform_multi`], and it stays
/// defined when `W_i` is singular.
pub fn sample_missing_multi(data: &MultiData, theta: &[DVector<f64>], rng: &mut RngStream) -> Vec<DVector<f64>> {
    let shrink = data.shrink();
    theta
        .iter()
        .zip(&shrink.w)
        .map(|(t, w)| {
            let e = sample_mvn_degenerate(&DVector::zeros(t.len()), &(w * shrink.vmin_scalar()), rng);
            w * t + e
        })
        .collect()
}

/// `y_i^aug = (I - W_i) y_i^obs + W_i y_i^mis`, so that `y_i^aug | θ_i ~ N(θ_i, V_min)`.
pub fn transform_multi(data: &MultiData, y_obs: &[DVector<f64>], w_mis: &[DVector<f64>]) -> Vec<DVector<f64>> {
    y_obs
        .iter()
        .zip(w_mis)
        .zip(&data.shrink().w)
        .map(|((y, wm), w)| y - w * y + wm)
        .collect()
}

/// Mean and covariance of `[θ_i | y_i^obs, A, β]`:
/// `(I - B_i) y_i + B_i X_iβ` and `(I - B_i) V_i`.
pub fn da_moments_multi(
    data: &MultiData,
    params: &MultiParams,
) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
    let p = data.p();
    let mut mu = Vec::with_capacity(data.k());
    let mut cov = Vec::with_capacity(data.k());
    for i in 0..data.k() {
        let (one_minus_b, post_cov) = shrinkage(data.v[i].matrix(), params.a.matrix());
        let b = DMatrix::identity(p, p) - &one_minus_b;
        mu.push(&one_minus_b * &data.y[i] + b * data.fitted(i, &params.beta));
        cov.push(post_cov);
    }
    (mu, cov)
}

/// `Σ log N_p(y_i; X_iβ, A + V_i)`.
pub fn loglik_obs_multi(data: &MultiData, params: &MultiParams) -> Result<f64> {
    let p = data.p() as f64;
    let mut total = 0.0;
    for i in 0..data.k() {
        let s = symmetrize(&(params.a.matrix() + data.v[i].matrix()));
        let l = cholesky_lower(&s).ok_or(DtaError::Singular("A + V_i"))?;
        let r = &data.y[i] - data.fitted(i, &params.beta);
        let z = l.solve_lower_triangular(&r).ok_or(DtaError::Singular("A + V_i"))?;
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        total += -0.5 * (p * LN_2PI + log_det + z.norm_squared());
    }
    Ok(total)
}
