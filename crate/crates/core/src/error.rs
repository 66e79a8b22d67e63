use thiserror::Error;

/// Errors raised by the samplers, EM routines and their inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DtaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("posterior propriety requires {requirement}, got k = {k}")]
    Propriety { requirement: String, k: usize },

    #[error(
        "truncated inverse-gamma mass {mass:.3e} above {lower} is too small \
         (shape {shape}, scale {scale})"
    )]
    TruncationMass { shape: f64, scale: f64, lower: f64, mass: f64 },

    #[error("rejection sampler stalled: {accepted} acceptances in {attempts} attempts ({what})")]
    RejectionStalled { what: &'static str, attempts: u64, accepted: u64 },

    #[error("approximate posterior is not normalizable: {0}")]
    Normalizability(String),

    #[error("grid does not cover the posterior: {0}")]
    GridTooNarrow(String),

    #[error("all log-weights are -inf")]
    DegenerateWeights,
}

impl DtaError {
    /// True for failures of a numerical routine on otherwise valid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            DtaError::TruncationMass { .. }
                | DtaError::RejectionStalled { .. }
                | DtaError::Normalizability(_)
                | DtaError::DegenerateWeights
                | DtaError::Singular(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, DtaError>;
