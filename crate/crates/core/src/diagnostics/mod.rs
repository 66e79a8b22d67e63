//! Chain summaries and EM convergence-rate diagnostics.

mod info;

pub use info::{
    aug_info_uni, expected_info_gap, fisher_obs_uni, matrix_rate, InfoMatrices,
};

use crate::error::{DtaError, Result};

/// Sample autocorrelations for lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub rho: Vec<f64>,
}

/// Sample mean and standard deviation (divisor `n - 1`).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Linear-interpolation quantile of an already sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

struct Centered {
    dev: Vec<f64>,
    denom: f64,
}

fn centered(chain: &[f64]) -> Result<Centered> {
    let n = chain.len() as f64;
    let mean = chain.iter().sum::<f64>() / n;
    let dev: Vec<f64> = chain.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if !(denom > 0.0) {
        return Err(DtaError::InvalidInput("chain is constant".into()));
    }
    Ok(Centered { dev, denom })
}

impl Centered {
    fn rho(&self, lag: usize) -> f64 {
        let d = &self.dev;
        d[..d.len() - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / self.denom
    }
}

/// `ρ_t = Σ(x_s - x̄)(x_{s+t} - x̄) / Σ(x_s - x̄)²`.
pub fn acf(chain: &[f64], max_lag: usize) -> Result<AcfResult> {
    if max_lag == 0 || chain.len() <= max_lag {
        return Err(DtaError::InvalidInput(format!(
            "need chain length > max_lag >= 1, got length {} and max_lag {max_lag}",
            chain.len()
        )));
    }
    let c = centered(chain)?;
    let rho = (0..=max_lag).map(|t| if t == 0 { 1.0 } else { c.rho(t) }).collect();
    Ok(AcfResult { lags: (0..=max_lag).collect(), rho })
}

/// Effective sample size `N / (1 + 2 Σ_{t=1}^{T} ρ_t)`, summing until the
/// first nonpositive autocorrelation, clamped to `(0, N]`.
pub fn ess(chain: &[f64]) -> Result<f64> {
    if chain.len() < 100 {
        return Err(DtaError::InvalidInput(format!(
            "ESS needs at least 100 draws, got {}",
            chain.len()
        )));
    }
    let c = centered(chain)?;
    let n = chain.len();
    let mut sum = 0.0;
    for t in 1..n {
        let r = c.rho(t);
        if r <= 0.0 {
            break;
        }
        sum += r;
    }
    let ess = n as f64 / (1.0 + 2.0 * sum);
    Ok(ess.clamp(f64::MIN_POSITIVE, n as f64))
}

/// Monte Carlo standard error of the mean, `sd / √ESS`.
pub fn mcse_mean(chain: &[f64]) -> Result<f64> {
    let (_, sd) = mean_sd(chain);
    Ok(sd / ess(chain)?.sqrt())
}

/// Monte Carlo standard error of a quantile by batch means over
/// `⌊√N⌋` contiguous batches.
pub fn mcse_quantile(chain: &[f64], q: f64) -> Result<f64> {
    if chain.len() < 100 {
        return Err(DtaError::InvalidInput("batch means need at least 100 draws".into()));
    }
    let n_batches = (chain.len() as f64).sqrt().floor() as usize;
    let size = chain.len() / n_batches;
    let qs: Vec<f64> = chain.chunks_exact(size).map(|b| quantile(b, q)).collect();
    let (_, sd) = mean_sd(&qs);
    Ok(sd / (qs.len() as f64).sqrt())
}
