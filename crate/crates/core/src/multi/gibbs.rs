use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{da_moments_multi, dta_aug_moments_multi, MultiData, MultiParams};
use crate::chain::{ChainOutput, GibbsConfig, Scheme};
use crate::error::{DtaError, Result};
use crate::stats::{
    cholesky_lower, sample_inverse_wishart_shifted, sample_mvn_degenerate, standard_normal,
    RngStream, SymPosDef,
};

/// Default start: `β_j ~ N(0, 1)`, `A` set to a uniformly chosen `V_i`.
fn default_init(data: &MultiData, rng: &mut RngStream) -> MultiParams {
    let beta = DVector::from_fn(data.m() * data.p(), |_, _| standard_normal(rng));
    let a = data.v()[rng.gen_range(0..data.k())].clone();
    MultiParams { beta, a }
}

/// `beta1..beta{mp}` then the upper triangle `A11, A12, …, App`.
pub(crate) fn param_names(m: usize, p: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=m * p).map(|j| format!("beta{j}")).collect();
    for r in 1..=p {
        for c in r..=p {
            names.push(format!("A{r}{c}"));
        }
    }
    names
}

pub(crate) fn flatten(params: &MultiParams) -> Vec<f64> {
    let a = params.a.matrix();
    let p = a.nrows();
    let mut row: Vec<f64> = params.beta.iter().copied().collect();
    for r in 0..p {
        for c in r..p {
            row.push(a[(r, c)]);
        }
    }
    row
}

/// Shared second half of both sweeps: given complete data `z` with
/// covariance `K = A + shift`, draw `K` from the inverse-Wishart,
/// then `β ~ N(β̂, K ⊗ (XᵀX)⁻¹)`.
fn draw_params(
    data: &MultiData,
    z: &[DVector<f64>],
    shift: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<(MultiParams, u64)> {
    let (k, m, p) = (data.k(), data.m(), data.p());
    let beta_hat = data.ols(z);
    let resid = MultiData::stack(z) - data.x() * &beta_hat;
    let scale = SymPosDef::new(crate::stats::symmetrize(&(resid.transpose() * &resid)))?;
    let df = (k - m - p - 1) as f64;
    let a = sample_inverse_wishart_shifted(df, &scale, shift, rng)?;
    let total = a.value.matrix() + shift;
    let l_k = cholesky_lower(&total).ok_or(DtaError::Singular("A + V_min"))?;
    // vec(L_x⁻ᵀ E L_Kᵀ) has covariance K ⊗ (XᵀX)⁻¹.
    let e = DMatrix::from_fn(m, p, |_, _| standard_normal(rng));
    let left = data
        .xtx_chol()
        .transpose()
        .solve_upper_triangular(&e)
        .ok_or(DtaError::Singular("XᵀX factor"))?;
    let beta = beta_hat + left * l_k.transpose();
    Ok((MultiParams { beta: DVector::from_column_slice(beta.as_slice()), a: a.value }, a.rejections))
}

fn dta_sweep(data: &MultiData, state: &mut MultiParams, rng: &mut RngStream) -> Result<u64> {
    let (mu, cov) = dta_aug_moments_multi(data, state);
    let y_aug: Vec<DVector<f64>> =
        mu.iter().zip(&cov).map(|(m, c)| sample_mvn_degenerate(m, c, rng)).collect();
    let (next, rejections) = draw_params(data, &y_aug, &data.shrink().vmin, rng)?;
    *state = next;
    Ok(rejections)
}

fn da_sweep(data: &MultiData, state: &mut MultiParams, rng: &mut RngStream) -> Result<u64> {
    let (mu, cov) = da_moments_multi(data, state);
    let theta: Vec<DVector<f64>> =
        mu.iter().zip(&cov).map(|(m, c)| sample_mvn_degenerate(m, c, rng)).collect();
    let p = data.p();
    let (next, rejections) = draw_params(data, &theta, &DMatrix::zeros(p, p), rng)?;
    *state = next;
    Ok(rejections)
}

/// Gibbs sampler for `p(A, β | y^obs)` in the multivariate model.
///
/// Under [`Scheme::Dta`] each sweep draws the homoscedastic augmented data,
/// then `A + V_min` from an inverse-Wishart with draws kept only when
/// `A` is positive definite, then `β`. Under [`Scheme::Da`] the random
/// effects are drawn instead and the inverse-Wishart is unrestricted.
pub fn run_gibbs_multi(
    data: &MultiData,
    scheme: Scheme,
    cfg: &GibbsConfig<MultiParams>,
) -> Result<ChainOutput> {
    cfg.validate()?;
    let mut rng = cfg.rng();
    let mut state = match &cfg.init {
        Some(p) => {
            p.check(data)?;
            p.clone()
        }
        None => default_init(data, &mut rng),
    };
    let mut out = ChainOutput::new(param_names(data.m(), data.p()), cfg);
    for iter in 0..cfg.n_iter {
        out.rejection_counts += match scheme {
            Scheme::Dta => dta_sweep(data, &mut state, &mut rng)?,
            Scheme::Da => da_sweep(data, &mut state, &mut rng)?,
        };
        if iter >= cfg.burn_in {
            out.draws.push(flatten(&state));
        }
    }
    Ok(out)
}
