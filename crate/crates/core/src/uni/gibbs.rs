use nalgebra::DVector;
use rand::Rng;

use super::{da_moments, dta_aug_moments, UniData, UniParams};
use crate::chain::{ChainOutput, GibbsConfig, Scheme};
use crate::error::{DtaError, Result};
use crate::stats::{sample_truncated_inverse_gamma, standard_normal, RngStream};

/// Default start: `β_j ~ N(0, 1)`, `A` set to a uniformly chosen `V_i`.
fn default_init(data: &UniData, rng: &mut RngStream) -> UniParams {
    let beta = DVector::from_fn(data.m(), |_, _| standard_normal(rng));
    let a = data.v()[rng.gen_range(0..data.k())];
    UniParams { beta, a }
}

fn param_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("beta{j}")).chain(std::iter::once("A".to_string())).collect()
}

/// `N(β̂, scale · (XᵀX)⁻¹)`.
fn draw_beta(
    data: &UniData,
    beta_hat: &DVector<f64>,
    scale: f64,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let l = data.xtx_chol();
    let z = DVector::from_fn(data.m(), |_, _| standard_normal(rng));
    let x = l.transpose().solve_upper_triangular(&z).ok_or(DtaError::Singular("XᵀX factor"))?;
    Ok(beta_hat + x * scale.sqrt())
}

fn residual_ss(data: &UniData, z: &DVector<f64>, beta_hat: &DVector<f64>) -> f64 {
    (z - data.fitted(beta_hat)).norm_squared()
}

/// One DTA sweep. Returns the number of rejected variance proposals.
fn dta_sweep(data: &UniData, state: &mut UniParams, rng: &mut RngStream) -> Result<u64> {
    let (mu, var) = dta_aug_moments(data, state);
    let y_aug = DVector::from_fn(data.k(), |i, _| mu[i] + var[i].sqrt() * standard_normal(rng));
    let beta_hat = data.ols(&y_aug);
    let ss = residual_ss(data, &y_aug, &beta_hat);
    let shape = (data.k() - data.m()) as f64 / 2.0 - 1.0;
    // T = A + V_min is conjugate for the homoscedastic augmented data.
    let t = sample_truncated_inverse_gamma(shape, ss / 2.0, data.vmin(), rng)?;
    state.a = t.value - data.vmin();
    state.beta = draw_beta(data, &beta_hat, t.value, rng)?;
    Ok(t.rejections)
}

fn da_sweep(data: &UniData, state: &mut UniParams, rng: &mut RngStream) -> Result<u64> {
    let (mu, var) = da_moments(data, state);
    let theta = DVector::from_fn(data.k(), |i, _| mu[i] + var[i].sqrt() * standard_normal(rng));
    let beta_hat = data.ols(&theta);
    let ss = residual_ss(data, &theta, &beta_hat);
    let shape = (data.k() - data.m()) as f64 / 2.0 - 1.0;
    let a = sample_truncated_inverse_gamma(shape, ss / 2.0, 0.0, rng)?;
    state.a = a.value;
    state.beta = draw_beta(data, &beta_hat, a.value, rng)?;
    Ok(0)
}

/// Gibbs sampler for `p(A, β | y^obs)`.
///
/// Under [`Scheme::Dta`] each sweep draws the homoscedastic augmented data,
/// then `A + V_min` from an inverse-gamma truncated above `V_min`, then `β`.
/// Under [`Scheme::Da`] the random effects `θ` are drawn instead and `A`
/// is untruncated.
pub fn run_gibbs_uni(
    data: &UniData,
    scheme: Scheme,
    cfg: &GibbsConfig<UniParams>,
) -> Result<ChainOutput> {
    cfg.validate()?;
    let mut rng = cfg.rng();
    let mut state = match &cfg.init {
        Some(p) => {
            if p.beta.len() != data.m() || !(p.a >= 0.0) {
                return Err(DtaError::InvalidInput("initial parameters do not fit the data".into()));
            }
            p.clone()
        }
        None => default_init(data, &mut rng),
    };
    let mut out = ChainOutput::new(param_names(data.m()), cfg);
    for iter in 0..cfg.n_iter {
        out.rejection_counts += match scheme {
            Scheme::Dta => dta_sweep(data, &mut state, &mut rng)?,
            Scheme::Da => da_sweep(data, &mut state, &mut rng)?,
        };
        if iter >= cfg.burn_in {
            let mut row: Vec<f64> = state.beta.iter().copied().collect();
            row.push(state.a);
            out.draws.push(row);
        }
    }
    Ok(out)
}
