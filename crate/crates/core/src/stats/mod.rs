//! Random-variate generation, special functions and symmetric-matrix
//! utilities shared by every model.

mod linalg;
mod rng;
mod sampling;
mod special;

pub use linalg::{cholesky_lower, is_positive_definite, spd_inverse, sym_sqrt, symmetrize, SymPosDef};
pub use rng::RngStream;
pub use sampling::{
    categorical_from_log_weights, normalized_probabilities, sample_beta, sample_binomial,
    sample_gamma, sample_inverse_wishart_shifted, sample_mvn_degenerate, sample_mvn_precision_chol,
    sample_truncated_inverse_gamma, standard_normal, Sampled,
};
pub use special::{
    inverse_gamma_upper_tail, ln_gamma, log_beta_fn, log_binomial, log_generalized_binomial,
    log_sum_exp,
};
