use rand::Rng;

use super::{build_with_cstar, cstar_series, ApproxPosterior, BinData, BinParams, PriorHyper};
use crate::chain::{ChainOutput, GibbsConfig};
use crate::error::{DtaError, Result};
use crate::stats::{
    categorical_from_log_weights, normalized_probabilities, sample_beta, sample_binomial,
    sample_gamma, RngStream,
};

/// Log-weights of the `(s, l)` mixture components of `p*(β | y^aug)`,
/// `s = i + j`, laid out row-major with `cstar.log_coeffs.len()` columns.
///
/// Summing the `(i, j, l)` component weights over `i + j = s` leaves
/// `e_s c*_l Γ(g(l) - s - 2) n^(s + 1 - g(l)) / Γ(g(l))` with
/// `e_s = Σ_{i+j=s} a_i i! b_j j!`.
pub(crate) fn beta_marginal_log_weights(ap: &ApproxPosterior) -> Vec<f64> {
    let e = &ap.ab_fact;
    let c = &ap.cstar;
    let ln_n = (ap.n as f64).ln();
    let mut logw = Vec::with_capacity(e.log_coeffs.len() * c.log_coeffs.len());
    for (si, es) in e.log_coeffs.iter().enumerate() {
        let s = e.min_degree + si;
        for (li, cl) in c.log_coeffs.iter().enumerate() {
            let l = c.min_degree + li;
            logw.push(
                es + cl + ap.ln_gamma_g(l, -(s as i64) - 2) - ap.ln_gamma_g(l, 0)
                    + (s as f64 + 1.0 - ap.g(l)) * ln_n,
            );
        }
    }
    logw
}

/// The `(s, l)` mixture for `p*(β | y^aug)` with its cumulative
/// probabilities tabulated once, for repeated draws.
pub(crate) struct BetaMarginalMixture<'a> {
    ap: &'a ApproxPosterior,
    cdf: Vec<f64>,
}

impl<'a> BetaMarginalMixture<'a> {
    pub(crate) fn new(ap: &'a ApproxPosterior) -> Result<Self> {
        let probs = normalized_probabilities(&beta_marginal_log_weights(ap))?;
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { ap, cdf })
    }

    pub(crate) fn draw(&self, rng: &mut RngStream) -> Result<f64> {
        let ap = self.ap;
        let u: f64 = rng.gen::<f64>() * self.cdf[self.cdf.len() - 1];
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        let width = ap.cstar.log_coeffs.len();
        let s = ap.ab_fact.min_degree + idx / width;
        let l = ap.cstar.min_degree + idx % width;

        let i_lo = ap.a.min_degree.max(s.saturating_sub(ap.b.max_degree()));
        let i_hi = ap.a.max_degree().min(s - ap.b.min_degree);
        let split: Vec<f64> = (i_lo..=i_hi)
            .map(|i| ap.a.log_coeff(i) + ap.ln_fact[i] + ap.b.log_coeff(s - i) + ap.ln_fact[s - i])
            .collect();
        let i = i_lo + categorical_from_log_weights(&split, rng)?;
        let j = s - i;
        let shape2 = ap.g(l) - s as f64 - 2.0;
        assert!(shape2 > 0.0, "normalizability violated at (i, j, l) = ({i}, {j}, {l})");
        let b = sample_beta(j as f64 + 1.0, shape2, rng)?;
        to_positive(ap.n as f64 * b / (1.0 - b), "beta")
    }
}

/// Draws `β` from the approximate marginal `p*(β | y^aug)`.
///
/// A component `(s, l)` is drawn first, then the split `i + j = s` with
/// probability `∝ a_i i! b_j j!`, then `B ~ Beta(j + 1, g(l) - i - j - 2)`
/// and `β = n B / (1 - B)`.
pub fn sample_beta_marginal(ap: &ApproxPosterior, rng: &mut RngStream) -> Result<f64> {
    BetaMarginalMixture::new(ap)?.draw(rng)
}

/// Log-weights of the `(i, l)` components of `p*(α | β, y^aug)`, row-major
/// with `cstar.log_coeffs.len()` columns.
pub(crate) fn alpha_log_weights(ap: &ApproxPosterior, beta: f64) -> Vec<f64> {
    let a = &ap.a;
    let c = &ap.cstar;
    let ln_t = (beta + ap.n as f64).ln();
    let mut logw = Vec::with_capacity(a.log_coeffs.len() * c.log_coeffs.len());
    for (ii, ai) in a.log_coeffs.iter().enumerate() {
        let i = a.min_degree + ii;
        for (li, cl) in c.log_coeffs.iter().enumerate() {
            let l = c.min_degree + li;
            // ln B(i + 1, g - i - 1) = ln i! + ln Γ(g - i - 1) - ln Γ(g)
            let lbeta = ap.ln_fact[i] + ap.ln_gamma_g(l, -(i as i64) - 1) - ap.ln_gamma_g(l, 0);
            logw.push(ai + cl + lbeta - (l as f64 - i as f64 - 1.0) * ln_t);
        }
    }
    logw
}

/// Draws `α` from `p*(α | β, y^aug)`: a component `(i, l)`, then
/// `A ~ Beta(i + 1, g(l) - i - 1)` and `α = (n + β) A / (1 - A)`.
pub fn sample_alpha_given_beta(ap: &ApproxPosterior, beta: f64, rng: &mut RngStream) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(DtaError::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let logw = alpha_log_weights(ap, beta);
    let width = ap.cstar.log_coeffs.len();
    let idx = categorical_from_log_weights(&logw, rng)?;
    let i = ap.a.min_degree + idx / width;
    let l = ap.cstar.min_degree + idx % width;
    let shape2 = ap.g(l) - i as f64 - 1.0;
    assert!(shape2 > 0.0, "normalizability violated at (i, l) = ({i}, {l})");
    let draw = sample_beta(i as f64 + 1.0, shape2, rng)?;
    to_positive((ap.n as f64 + beta) * draw / (1.0 - draw), "alpha")
}

fn to_positive(x: f64, what: &'static str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(DtaError::RejectionStalled { what, attempts: 1, accepted: 0 })
    }
}

/// Augmented successes: `θ_i ~ Beta(y_i + α, n_i - y_i + β)`, then
/// `y_i + Binomial(n_max - n_i, θ_i)`.
pub fn augment_successes(data: &BinData, params: &BinParams, rng: &mut RngStream) -> Result<Vec<u64>> {
    let n_max = data.n_max();
    data.y()
        .iter()
        .zip(data.n())
        .map(|(&y, &n)| {
            let theta = sample_beta(y as f64 + params.alpha, (n - y) as f64 + params.beta, rng)?;
            let missing = if n == n_max { 0 } else { sample_binomial(n_max - n, theta, rng)? };
            Ok(y + missing)
        })
        .collect()
}

/// Gibbs sampler for `p(α, β | y^obs)` that augments every group to the
/// largest trial count and samples `(α, β)` from the series approximation
/// of order `(m1, m2)`. Default start draws `α, β ~ Gamma(10, 1)`.
pub fn run_gibbs_betabin(
    data: &BinData,
    prior: &PriorHyper,
    m1: usize,
    m2: usize,
    cfg: &GibbsConfig<BinParams>,
) -> Result<ChainOutput> {
    cfg.validate()?;
    let n_max = data.n_max();
    // The `c*` table depends only on (k, n_max, prior, m1, m2).
    let cstar = cstar_series(data.k(), n_max, prior, m1, m2)?;
    let mut rng = cfg.rng();
    let mut state = match cfg.init {
        Some(p) => {
            if !(p.alpha > 0.0 && p.beta > 0.0) {
                return Err(DtaError::InvalidInput(format!("initial values must be positive: {p:?}")));
            }
            p
        }
        None => BinParams {
            alpha: sample_gamma(10.0, 1.0, &mut rng)?,
            beta: sample_gamma(10.0, 1.0, &mut rng)?,
        },
    };
    let mut out = ChainOutput::new(vec!["alpha".into(), "beta".into()], cfg);
    for iter in 0..cfg.n_iter {
        let y_aug = augment_successes(data, &state, &mut rng)?;
        let ap = build_with_cstar(&y_aug, n_max, prior, m1, m2, cstar.clone())?;
        let beta = sample_beta_marginal(&ap, &mut rng)?;
        let alpha = sample_alpha_given_beta(&ap, beta, &mut rng)?;
        state = BinParams { alpha, beta };
        if iter >= cfg.burn_in {
            out.draws.push(vec![alpha, beta]);
        }
    }
    Ok(out)
}
