use nalgebra::DVector;

use super::{da_moments, dta_aug_moments, loglik_obs_uni, UniData, UniParams};
use crate::chain::{EmConfig, EmTrace, Scheme};
use crate::error::{DtaError, Result};

/// One closed-form M-step given the E-step moments of the augmented data.
fn m_step(data: &UniData, mean: &DVector<f64>, var: &DVector<f64>, shift: f64) -> UniParams {
    let beta = data.ols(mean);
    let resid = mean - data.fitted(&beta);
    let k = data.k() as f64;
    let second_moment = (resid.norm_squared() + var.sum()) / k;
    UniParams { beta, a: (second_moment - shift).max(0.0) }
}

/// EM for the posterior mode of `(β, A)` (the MLE under the flat prior).
///
/// DTA: `β' = (XᵀX)⁻¹Xᵀ E(y^aug)`, `A' = max{mean E(y^aug_i - x_iᵀβ')² - V_min, 0}`.
/// DA: the same with `θ` in place of `y^aug` and no `V_min` shift.
/// Stopping follows `cfg.stop`.
pub fn run_em_uni(
    data: &UniData,
    scheme: Scheme,
    cfg: &EmConfig<UniParams>,
) -> Result<EmTrace<UniParams>> {
    cfg.validate()?;
    let init = cfg.init.clone().unwrap_or_else(|| UniParams::new(vec![0.0; data.m()], 1.0));
    if init.beta.len() != data.m() || !(init.a >= 0.0) {
        return Err(DtaError::InvalidInput("initial parameters do not fit the data".into()));
    }
    let mut trace = EmTrace {
        loglik: vec![loglik_obs_uni(data, &init)],
        iterates: vec![init],
        converged: false,
        n_iter: 0,
    };
    for iter in 1..=cfg.max_iter {
        let current = trace.last();
        let next = match scheme {
            Scheme::Dta => {
                let (mu, var) = dta_aug_moments(data, current);
                m_step(data, &mu, &var, data.vmin())
            }
            Scheme::Da => {
                let (mu, var) = da_moments(data, current);
                m_step(data, &mu, &var, 0.0)
            }
        };
        let change = next.max_abs_diff(current);
        let prev = *trace.loglik.last().unwrap();
        trace.loglik.push(loglik_obs_uni(data, &next));
        trace.iterates.push(next);
        trace.n_iter = iter;
        if cfg.is_converged(change, prev, *trace.loglik.last().unwrap()) {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}
