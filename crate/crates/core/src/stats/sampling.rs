use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Binomial, ChiSquared, Distribution, Gamma, StandardNormal};

use super::linalg::{cholesky_lower, symmetrize, SymPosDef};
use super::special::{inverse_gamma_upper_tail, log_sum_exp};
use super::RngStream;
use crate::error::{DtaError, Result};

/// Minimum truncation mass accepted by the truncated inverse-gamma sampler.
const MIN_TRUNCATION_MASS: f64 = 1e-12;
/// Hard cap on rejection attempts for a single truncated draw.
const MAX_IG_ATTEMPTS: u64 = 50_000_000;
/// Shifted inverse-Wishart draws abort when this many consecutive proposals fail
/// (acceptance rate below 1e-6).
const IW_PROBE_BATCH: u64 = 1_000_000;

/// A draw together with the number of rejected proposals that preceded it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled<T> {
    pub value: T,
    pub rejections: u64,
}

pub fn standard_normal(rng: &mut RngStream) -> f64 {
    StandardNormal.sample(rng)
}

/// Gamma draw with the shape/scale parameterization.
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    let dist = Gamma::new(shape, scale)
        .map_err(|e| DtaError::InvalidInput(format!("gamma({shape}, {scale}): {e}")))?;
    Ok(dist.sample(rng))
}

pub fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    let dist =
        Beta::new(a, b).map_err(|e| DtaError::InvalidInput(format!("beta({a}, {b}): {e}")))?;
    Ok(dist.sample(rng))
}

pub fn sample_binomial(n: u64, p: f64, rng: &mut RngStream) -> Result<u64> {
    if n == 0 {
        return Ok(0);
    }
    let dist = Binomial::new(n, p)
        .map_err(|e| DtaError::InvalidInput(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sample(rng))
}

/// `exp(logw_i) / Σ exp(logw_j)`.
pub fn normalized_probabilities(logw: &[f64]) -> Result<Vec<f64>> {
    let total = log_sum_exp(logw)?;
    if total == f64::NEG_INFINITY {
        return Err(DtaError::DegenerateWeights);
    }
    if !total.is_finite() {
        return Err(DtaError::InvalidInput("log-weights must be finite or -inf".into()));
    }
    Ok(logw.iter().map(|w| (w - total).exp()).collect())
}

/// Index `i` drawn with probability proportional to `exp(logw_i)`.
pub fn categorical_from_log_weights(logw: &[f64], rng: &mut RngStream) -> Result<usize> {
    let total = log_sum_exp(logw)?;
    if total == f64::NEG_INFINITY {
        return Err(DtaError::DegenerateWeights);
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in logw.iter().enumerate() {
        if *w == f64::NEG_INFINITY {
            continue;
        }
        acc += (w - total).exp();
        last = i;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding left u just above the accumulated mass.
    Ok(last)
}

/// `IG(shape, scale)` restricted to `(lower, ∞)`, by redrawing until the
/// draw exceeds `lower`.
pub fn sample_truncated_inverse_gamma(
    shape: f64,
    scale: f64,
    lower: f64,
    rng: &mut RngStream,
) -> Result<Sampled<f64>> {
    if !(shape > 0.0 && scale > 0.0 && lower >= 0.0) {
        return Err(DtaError::InvalidInput(format!(
            "truncated inverse-gamma needs shape > 0, scale > 0, lower >= 0; \
             got ({shape}, {scale}, {lower})"
        )));
    }
    if lower > 0.0 {
        let mass = inverse_gamma_upper_tail(shape, scale, lower);
        if mass < MIN_TRUNCATION_MASS {
            return Err(DtaError::TruncationMass { shape, scale, lower, mass });
        }
    }
    let gamma = Gamma::new(shape, 1.0)
        .map_err(|e| DtaError::InvalidInput(format!("gamma({shape}, 1): {e}")))?;
    let mut rejections = 0;
    loop {
        let x = scale / gamma.sample(rng);
        if x > lower {
            return Ok(Sampled { value: x, rejections });
        }
        rejections += 1;
        if rejections >= MAX_IG_ATTEMPTS {
            return Err(DtaError::RejectionStalled {
                what: "truncated inverse-gamma",
                attempts: rejections,
                accepted: 0,
            });
        }
    }
}

/// One draw from `IW(df, scale)` with density ∝ |Σ|^{-(df+p+1)/2} exp(-tr(S Σ⁻¹)/2),
/// via the Bartlett decomposition of the Wishart-distributed precision.
fn sample_inverse_wishart(
    df: f64,
    scale_inv_chol: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    let p = scale_inv_chol.nrows();
    let mut bartlett = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(df - i as f64)
            .map_err(|e| DtaError::InvalidInput(format!("chi-squared({}): {e}", df - i as f64)))?;
        bartlett[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            bartlett[(i, j)] = standard_normal(rng);
        }
    }
    // Precision = M Mᵀ with M = L A lower triangular, so Σ = M⁻ᵀ M⁻¹.
    let m = scale_inv_chol * bartlett;
    let m_inv = m
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or(DtaError::Singular("Bartlett factor"))?;
    Ok(symmetrize(&(m_inv.transpose() * m_inv)))
}

/// Draws `K ~ IW(df, scale)` until `K - shift` is positive definite and
/// returns `A = K - shift`.
pub fn sample_inverse_wishart_shifted(
    df: f64,
    scale: &SymPosDef,
    shift: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<Sampled<SymPosDef>> {
    let p = scale.dim();
    if !(df > p as f64 - 1.0) {
        return Err(DtaError::InvalidInput(format!(
            "inverse-Wishart needs df > p - 1, got df = {df}, p = {p}"
        )));
    }
    if shift.nrows() != p || shift.ncols() != p {
        return Err(DtaError::InvalidInput("shift dimension mismatch".into()));
    }
    let scale_inv = super::linalg::spd_inverse(scale.matrix())?;
    let scale_inv_chol = cholesky_lower(&scale_inv).ok_or(DtaError::Singular("IW scale"))?;
    let mut rejections = 0;
    loop {
        let k = sample_inverse_wishart(df, &scale_inv_chol, rng)?;
        let a = symmetrize(&(k - shift));
        if cholesky_lower(&a).is_some() {
            if let Ok(a) = SymPosDef::new(a) {
                return Ok(Sampled { value: a, rejections });
            }
        }
        rejections += 1;
        if rejections >= IW_PROBE_BATCH {
            return Err(DtaError::RejectionStalled {
                what: "shifted inverse-Wishart",
                attempts: rejections,
                accepted: 0,
            });
        }
    }
}

/// Gaussian draw with a possibly singular covariance.
///
/// Directions whose eigenvalue falls below `1e-12 · trace` are treated as
/// deterministic, so a zero covariance returns the mean exactly.
pub fn sample_mvn_degenerate(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut RngStream,
) -> DVector<f64> {
    let p = mean.len();
    let trace = cov.trace();
    if trace <= 0.0 {
        return mean.clone();
    }
    let threshold = 1e-12 * trace;
    let eig = symmetrize(cov).symmetric_eigen();
    let mut out = mean.clone();
    for j in 0..p {
        let lambda = eig.eigenvalues[j];
        if lambda > threshold {
            let z = standard_normal(rng) * lambda.sqrt();
            out += eig.eigenvectors.column(j) * z;
        }
    }
    out
}

/// Gaussian draw `N(mean, P⁻¹)` given the lower Cholesky factor `L` of the precision `P`.
pub fn sample_mvn_precision_chol(
    mean: &DVector<f64>,
    precision_chol: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let z = DVector::from_fn(mean.len(), |_, _| standard_normal(rng));
    let x = precision_chol
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or(DtaError::Singular("precision factor"))?;
    Ok(mean + x)
}
