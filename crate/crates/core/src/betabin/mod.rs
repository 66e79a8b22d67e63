//! Beta-Binomial model with a trial-count homogenizing augmentation and a
//! truncated-series approximation to the posterior of `(α, β)`.

mod oracle;
mod sampler;

pub use oracle::{approx_grid_posterior, exact_grid_posterior, loglik_betabin, GridDensity2};
pub use sampler::{
    augment_successes, run_gibbs_betabin, sample_alpha_given_beta, sample_beta_marginal,
};

use crate::error::{DtaError, Result};
use crate::stats::{ln_gamma, log_generalized_binomial, log_sum_exp};

/// Successes `y_i` out of `n_i` trials for each of `k` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct BinData {
    y: Vec<u64>,
    n: Vec<u64>,
}

impl BinData {
    pub fn new(y: Vec<u64>, n: Vec<u64>) -> Result<Self> {
        if y.is_empty() {
            return Err(DtaError::Empty("binomial data"));
        }
        if y.len() != n.len() {
            return Err(DtaError::InvalidInput(format!(
                "y has {} groups but n has {}",
                y.len(),
                n.len()
            )));
        }
        for (i, (&yi, &ni)) in y.iter().zip(&n).enumerate() {
            if ni == 0 || yi > ni {
                return Err(DtaError::InvalidInput(format!(
                    "group {i}: need 0 <= y <= n and n >= 1, got y = {yi}, n = {ni}"
                )));
            }
        }
        let interior = y.iter().zip(&n).filter(|(&yi, &ni)| yi > 0 && yi < ni).count();
        if interior < 2 {
            return Err(DtaError::Propriety {
                requirement: "at least two groups with 0 < y_i < n_i".into(),
                k: y.len(),
            });
        }
        Ok(Self { y, n })
    }

    pub fn k(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[u64] {
        &self.y
    }

    pub fn n(&self) -> &[u64] {
        &self.n
    }

    pub fn n_max(&self) -> u64 {
        *self.n.iter().max().unwrap()
    }

    /// Swaps successes and failures.
    pub fn flipped(&self) -> Self {
        let y = self.y.iter().zip(&self.n).map(|(y, n)| n - y).collect();
        Self { y, n: self.n.clone() }
    }
}

/// Prior `p(α, β) ∝ (α + β + γ)^(-c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorHyper {
    pub c: f64,
    pub gamma: f64,
}

impl PriorHyper {
    pub fn new(c: f64, gamma: f64) -> Result<Self> {
        if !(c > 2.0) || !c.is_finite() {
            return Err(DtaError::InvalidInput(format!("prior exponent c must exceed 2, got {c}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(DtaError::InvalidInput(format!("prior shift gamma must be >= 0, got {gamma}")));
        }
        Ok(Self { c, gamma })
    }

    pub fn log_density(&self, alpha: f64, beta: f64) -> f64 {
        -self.c * (alpha + beta + self.gamma).ln()
    }
}

impl Default for PriorHyper {
    fn default() -> Self {
        Self { c: 3.0, gamma: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinParams {
    pub alpha: f64,
    pub beta: f64,
}

/// Polynomial `Σ_t exp(log_coeffs[t]) x^(min_degree + t)` with nonnegative
/// coefficients stored as logs.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPoly {
    pub min_degree: usize,
    pub log_coeffs: Vec<f64>,
}

impl LogPoly {
    pub fn one() -> Self {
        Self { min_degree: 0, log_coeffs: vec![0.0] }
    }

    pub fn max_degree(&self) -> usize {
        self.min_degree + self.log_coeffs.len() - 1
    }

    /// Log coefficient of `x^d`, `-inf` outside the stored range.
    pub fn log_coeff(&self, d: usize) -> f64 {
        if d < self.min_degree {
            return f64::NEG_INFINITY;
        }
        self.log_coeffs.get(d - self.min_degree).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Lowest and highest degrees with a nonzero coefficient.
    pub fn support(&self) -> Option<(usize, usize)> {
        let first = self.log_coeffs.iter().position(|c| *c > f64::NEG_INFINITY)?;
        let last = self.log_coeffs.iter().rposition(|c| *c > f64::NEG_INFINITY)?;
        Some((self.min_degree + first, self.min_degree + last))
    }

    pub fn mul(&self, other: &LogPoly) -> LogPoly {
        self.mul_truncated(other, usize::MAX)
    }

    /// Product with every term above `max_degree` dropped.
    pub fn mul_truncated(&self, other: &LogPoly, max_degree: usize) -> LogPoly {
        let min_degree = self.min_degree + other.min_degree;
        let full = self.log_coeffs.len() + other.log_coeffs.len() - 1;
        let len = full.min(max_degree.saturating_sub(min_degree).saturating_add(1));
        let (p, q) = (&self.log_coeffs, &other.log_coeffs);
        let log_coeffs = (0..len)
            .map(|d| {
                let lo = d.saturating_sub(q.len() - 1);
                let hi = d.min(p.len() - 1);
                let mut max = f64::NEG_INFINITY;
                for i in lo..=hi {
                    max = max.max(p[i] + q[d - i]);
                }
                if max == f64::NEG_INFINITY {
                    return max;
                }
                let s: f64 = (lo..=hi).map(|i| (p[i] + q[d - i] - max).exp()).sum();
                max + s.ln()
            })
            .collect();
        LogPoly { min_degree, log_coeffs }
    }

    /// `log Σ c_t x^t` for `x > 0`.
    pub fn log_eval(&self, x: f64) -> f64 {
        let lx = x.ln();
        let terms: Vec<f64> = self
            .log_coeffs
            .iter()
            .enumerate()
            .map(|(t, c)| c + (self.min_degree + t) as f64 * lx)
            .collect();
        log_sum_exp(&terms).expect("nonempty")
    }
}

/// Coefficients of `x(x+1)···(x+count-1)`.
pub fn rising_factorial_logpoly(count: u64) -> LogPoly {
    let mut poly = LogPoly::one();
    for r in 0..count {
        // x + r
        let factor = if r == 0 {
            LogPoly { min_degree: 1, log_coeffs: vec![0.0] }
        } else {
            LogPoly { min_degree: 0, log_coeffs: vec![(r as f64).ln(), 0.0] }
        };
        poly = poly.mul(&factor);
    }
    poly
}

/// Series of `u^n / Π_{q=1}^{n} (u - q)` in powers of `1/u`, through order `m1`.
fn group_series(n: u64, m1: usize) -> LogPoly {
    let mut series = LogPoly::one();
    for q in 1..=n {
        let lq = (q as f64).ln();
        let geometric = LogPoly {
            min_degree: 0,
            log_coeffs: (0..=m1).map(|t| t as f64 * lq).collect(),
        };
        series = series.mul_truncated(&geometric, m1);
    }
    series
}

/// Series of `u^c (u - (n - γ))^(-c)` in powers of `1/u`, through order `m2`.
fn prior_series(n: u64, prior: &PriorHyper, m2: usize) -> LogPoly {
    let shift = n as f64 - prior.gamma;
    let log_coeffs = (0..=m2)
        .map(|t| {
            if t == 0 {
                0.0
            } else if shift == 0.0 {
                f64::NEG_INFINITY
            } else {
                log_generalized_binomial(prior.c, t as u64) + t as f64 * shift.ln()
            }
        })
        .collect();
    LogPoly { min_degree: 0, log_coeffs }
}

/// The coefficients `c*_l` multiplying `u^(-(nk + c + l))`, `u = α + β + n`.
/// They depend on the trial count and group count but not on the successes.
pub fn cstar_series(k: usize, n: u64, prior: &PriorHyper, m1: usize, m2: usize) -> Result<LogPoly> {
    if prior.gamma > n as f64 {
        return Err(DtaError::InvalidInput(format!(
            "prior shift gamma = {} exceeds the trial count {n}",
            prior.gamma
        )));
    }
    let group = group_series(n, m1);
    let mut total = LogPoly::one();
    for _ in 0..k {
        total = total.mul(&group);
    }
    Ok(total.mul(&prior_series(n, prior, m2)))
}

/// Truncated-series approximation to `p(α, β | y^aug)` for a dataset with
/// a common trial count:
/// `p* ∝ Σ a_i b_j c*_l α^i β^j / (α + β + n)^(g(l))`, `g(l) = nk + c + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxPosterior {
    pub a: LogPoly,
    pub b: LogPoly,
    pub cstar: LogPoly,
    pub n: u64,
    pub k: usize,
    pub c: f64,
    pub gamma: f64,
    pub m1: usize,
    pub m2: usize,
    /// Convolution of `a_i i!` with `b_j j!` over `s = i + j`.
    pub(crate) ab_fact: LogPoly,
    /// `ln Γ(nk + c + d)` for `d` from `-(nk + 2)` upward.
    lgamma_table: Vec<f64>,
    /// `ln i!` for `i = 0..=nk`.
    pub(crate) ln_fact: Vec<f64>,
}

impl ApproxPosterior {
    pub fn g(&self, l: usize) -> f64 {
        (self.n as usize * self.k) as f64 + self.c + l as f64
    }

    /// `ln Γ(g(l) + offset)` from the precomputed table.
    pub(crate) fn ln_gamma_g(&self, l: usize, offset: i64) -> f64 {
        let idx = l as i64 + offset + (self.n as i64 * self.k as i64 + 2);
        self.lgamma_table[idx as usize]
    }

    pub fn s1(&self) -> usize {
        self.a.min_degree
    }

    pub fn st(&self) -> usize {
        self.a.max_degree()
    }

    pub fn f1(&self) -> usize {
        self.b.min_degree
    }

    pub fn ft(&self) -> usize {
        self.b.max_degree()
    }
}

pub fn build_approx_posterior(
    y_aug: &[u64],
    n: u64,
    prior: &PriorHyper,
    m1: usize,
    m2: usize,
) -> Result<ApproxPosterior> {
    let cstar = cstar_series(y_aug.len(), n, prior, m1, m2)?;
    build_with_cstar(y_aug, n, prior, m1, m2, cstar)
}

pub(crate) fn build_with_cstar(
    y_aug: &[u64],
    n: u64,
    prior: &PriorHyper,
    m1: usize,
    m2: usize,
    cstar: LogPoly,
) -> Result<ApproxPosterior> {
    if y_aug.is_empty() {
        return Err(DtaError::Empty("augmented successes"));
    }
    if let Some(bad) = y_aug.iter().position(|&y| y > n) {
        return Err(DtaError::InvalidInput(format!(
            "group {bad}: y_aug = {} exceeds n = {n}",
            y_aug[bad]
        )));
    }
    let k = y_aug.len();
    let mut a = LogPoly::one();
    let mut b = LogPoly::one();
    for &y in y_aug {
        if y >= 1 {
            a = a.mul(&rising_factorial_logpoly(y));
        }
        if y + 1 <= n {
            b = b.mul(&rising_factorial_logpoly(n - y));
        }
    }
    let nk = n as usize * k;
    let g0 = nk as f64 + prior.c;
    let (l_lo, _) = cstar.support().ok_or(DtaError::DegenerateWeights)?;
    // The largest i + j is s_t + f_t = nk.
    if !((a.max_degree() + b.max_degree()) as f64 + 2.0 < g0 + l_lo as f64) {
        return Err(DtaError::Normalizability(format!(
            "i + j = {} is not below g({l_lo}) - 2 = {} for y_aug = {y_aug:?}",
            a.max_degree() + b.max_degree(),
            g0 + l_lo as f64 - 2.0
        )));
    }
    let ln_fact: Vec<f64> = (0..=nk).map(|i| ln_gamma(i as f64 + 1.0)).collect();
    let weighted = |p: &LogPoly| LogPoly {
        min_degree: p.min_degree,
        log_coeffs: p.log_coeffs.iter().enumerate().map(|(t, c)| c + ln_fact[p.min_degree + t]).collect(),
    };
    let ab_fact = weighted(&a).mul(&weighted(&b));
    let lgamma_table = (0..=nk + 2 + cstar.max_degree())
        .map(|t| ln_gamma(g0 + t as f64 - (nk + 2) as f64))
        .collect();
    Ok(ApproxPosterior {
        a,
        b,
        cstar,
        n,
        k,
        c: prior.c,
        gamma: prior.gamma,
        m1,
        m2,
        ab_fact,
        lgamma_table,
        ln_fact,
    })
}

/// `log p*(α, β)` up to the normalizing constant.
pub fn logpdf_approx_joint(ap: &ApproxPosterior, alpha: f64, beta: f64) -> f64 {
    let u = alpha + beta + ap.n as f64;
    let g0 = ap.g(0);
    ap.a.log_eval(alpha) + ap.b.log_eval(beta) + ap.cstar.log_eval(1.0 / u) - g0 * u.ln()
}
