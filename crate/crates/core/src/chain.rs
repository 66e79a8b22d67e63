//! Configuration and output containers shared by the samplers and EM routines.

use crate::error::{DtaError, Result};
use crate::stats::RngStream;

/// Which augmentation the iterative algorithms use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Data transforming augmentation: the augmented data are made homoscedastic.
    Dta,
    /// Classical augmentation with the random effects as missing data.
    Da,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Dta => "dta",
            Scheme::Da => "da",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = DtaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dta" => Ok(Scheme::Dta),
            "da" => Ok(Scheme::Da),
            other => Err(DtaError::InvalidInput(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GibbsConfig<P> {
    pub n_iter: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Chain index; each index reads its own substream of `seed`.
    pub chain: u64,
    /// Starting point. `None` applies the model's default initialization rule.
    pub init: Option<P>,
}

impl<P> GibbsConfig<P> {
    pub fn new(n_iter: usize, burn_in: usize, seed: u64) -> Self {
        Self { n_iter, burn_in, seed, chain: 0, init: None }
    }

    pub fn with_init(mut self, init: P) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_chain(mut self, chain: u64) -> Self {
        self.chain = chain;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(DtaError::InvalidInput(format!(
                "n_iter ({}) must exceed burn_in ({})",
                self.n_iter, self.burn_in
            )));
        }
        Ok(())
    }

    pub(crate) fn rng(&self) -> RngStream {
        RngStream::new(self.seed).substream(self.chain)
    }
}

/// When an EM run counts as converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// `|ℓ_t - ℓ_{t-1}| < tol · |ℓ_t|`.
    RelativeLoglik,
    /// Every component of the parameter moves by less than `tol`.
    ParamChange,
}

impl std::str::FromStr for StopRule {
    type Err = DtaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglik" => Ok(StopRule::RelativeLoglik),
            "param" => Ok(StopRule::ParamChange),
            other => Err(DtaError::InvalidInput(format!("unknown stopping rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmConfig<P> {
    pub tol: f64,
    pub max_iter: usize,
    pub init: Option<P>,
    pub stop: StopRule,
}

impl<P> Default for EmConfig<P> {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000, init: None, stop: StopRule::RelativeLoglik }
    }
}

impl<P> EmConfig<P> {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_init(mut self, init: P) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub(crate) fn is_converged(&self, param_change: f64, loglik_prev: f64, loglik_next: f64) -> bool {
        match self.stop {
            StopRule::ParamChange => param_change < self.tol,
            StopRule::RelativeLoglik => (loglik_next - loglik_prev).abs() < self.tol * loglik_next.abs(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(DtaError::InvalidInput("EM needs tol > 0 and max_iter > 0".into()));
        }
        Ok(())
    }
}

/// Post-burn-in draws, one row per retained iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub names: Vec<String>,
    pub draws: Vec<Vec<f64>>,
    pub seed: u64,
    pub chain: u64,
    pub burn_in: usize,
    /// Proposals rejected by truncated or shifted samplers over the whole run.
    pub rejection_counts: u64,
}

impl ChainOutput {
    pub(crate) fn new<P>(names: Vec<String>, cfg: &GibbsConfig<P>) -> Self {
        Self {
            names,
            draws: Vec::with_capacity(cfg.n_iter - cfg.burn_in),
            seed: cfg.seed,
            chain: cfg.chain,
            burn_in: cfg.burn_in,
            rejection_counts: 0,
        }
    }

    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.index_of(name)?;
        Some(self.draws.iter().map(|row| row[j]).collect())
    }
}

/// Iterates of an EM run. `iterates[0]` and `loglik[0]` belong to the
/// starting point; entry `t` is the state after the `t`-th M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct EmTrace<P> {
    pub iterates: Vec<P>,
    pub loglik: Vec<f64>,
    pub converged: bool,
    pub n_iter: usize,
}

impl<P> EmTrace<P> {
    pub fn last(&self) -> &P {
        self.iterates.last().expect("trace holds the starting point")
    }

    /// Largest decrease of the log-likelihood between consecutive iterates.
    pub fn max_loglik_drop(&self) -> f64 {
        self.loglik.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}
