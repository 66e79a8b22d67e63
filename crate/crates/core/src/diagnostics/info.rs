//! Information matrices of the univariate model in the parameter order `(β_1, …, β_m, A)`.

use nalgebra::DMatrix;
#[cfg(test)]
use nalgebra::DVector;

use crate::chain::Scheme;
use crate::error::{DtaError, Result};
use crate::uni::{da_moments, dta_aug_moments, UniData, UniParams};

#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrices {
    pub i_obs: DMatrix<f64>,
    pub i_aug: DMatrix<f64>,
    pub rate: DMatrix<f64>,
    pub spectral_radius: f64,
}

/// Information of independent normals `z_i ~ N(x_iᵀβ, s_i)` after
/// replacing `(z_i - x_iᵀβ)` by a residual with mean `r_i` and extra
/// variance `extra_i`.
fn normal_information(x: &DMatrix<f64>, s: &[f64], r: &[f64], extra: &[f64]) -> DMatrix<f64> {
    let (k, m) = (x.nrows(), x.ncols());
    let mut out = DMatrix::zeros(m + 1, m + 1);
    for i in 0..k {
        let xi = x.row(i).transpose();
        let s2 = s[i] * s[i];
        let mut block = out.view_mut((0, 0), (m, m));
        block += &xi * xi.transpose() / s[i];
        for j in 0..m {
            out[(j, m)] += xi[j] * r[i] / s2;
        }
        out[(m, m)] += -0.5 / s2 + (r[i] * r[i] + extra[i]) / (s2 * s[i]);
    }
    for j in 0..m {
        out[(m, j)] = out[(j, m)];
    }
    out
}

/// Observed information `-∂² log L(β, A; y^obs)`.
pub fn fisher_obs_uni(data: &UniData, params: &UniParams) -> DMatrix<f64> {
    let fitted = data.fitted(&params.beta);
    let s: Vec<f64> = data.v().iter().map(|v| params.a + v).collect();
    let r: Vec<f64> = data.y().iter().zip(fitted.iter()).map(|(y, f)| y - f).collect();
    normal_information(data.x(), &s, &r, &vec![0.0; data.k()])
}

/// Expected augmented-data information given `y^obs` at `(β, A)`.
///
/// DTA treats `y^aug_i ~ N(x_iᵀβ, A + V_min)` with moments `(μ*_i, v*_i)`;
/// DA treats `θ_i ~ N(x_iᵀβ, A)` with the moments of `θ_i | y_i`.
pub fn aug_info_uni(data: &UniData, params: &UniParams, scheme: Scheme) -> Result<DMatrix<f64>> {
    let (mean, var, s) = match scheme {
        Scheme::Dta => {
            if !(params.a >= 0.0) {
                return Err(DtaError::InvalidInput("A must be nonnegative".into()));
            }
            let (mu, var) = dta_aug_moments(data, params);
            (mu, var, params.a + data.vmin())
        }
        Scheme::Da => {
            if !(params.a > 0.0) {
                return Err(DtaError::InvalidInput(
                    "DA augmented information needs A > 0".into(),
                ));
            }
            let (mu, var) = da_moments(data, params);
            (mu, var, params.a)
        }
    };
    let r: Vec<f64> = (mean - data.fitted(&params.beta)).iter().copied().collect();
    let s = vec![s; data.k()];
    Ok(normal_information(data.x(), &s, &r, var.as_slice()))
}

/// `rate = I - i_obs i_aug⁻¹` and its largest eigenvalue modulus.
pub fn matrix_rate(i_obs: &DMatrix<f64>, i_aug: &DMatrix<f64>) -> Result<InfoMatrices> {
    let n = i_obs.nrows();
    if i_obs.shape() != i_aug.shape() || i_obs.ncols() != n {
        return Err(DtaError::InvalidInput("information matrices must be square and equal in size".into()));
    }
    let inv = i_aug.clone().try_inverse().ok_or(DtaError::Singular("augmented information"))?;
    let rate = DMatrix::identity(n, n) - i_obs * inv;
    let spectral_radius = rate.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(InfoMatrices { i_obs: i_obs.clone(), i_aug: i_aug.clone(), rate, spectral_radius })
}

/// `E(I_aug^DA - I_aug^DTA | β, A)` over `y^obs` drawn from the model:
/// `β`-block `XᵀX (1/A - 1/(A + V_min))`, `A`-entry `k/2 (1/A² - 1/(A + V_min)²)`.
pub fn expected_info_gap(data: &UniData, params: &UniParams) -> Result<DMatrix<f64>> {
    if !(params.a > 0.0) {
        return Err(DtaError::InvalidInput("expected information gap needs A > 0".into()));
    }
    let (a, vmin, m) = (params.a, data.vmin(), data.m());
    let mut out = DMatrix::zeros(m + 1, m + 1);
    let xtx = data.x().transpose() * data.x();
    out.view_mut((0, 0), (m, m)).copy_from(&(xtx * (1.0 / a - 1.0 / (a + vmin))));
    out[(m, m)] = data.k() as f64 / 2.0 * (1.0 / (a * a) - 1.0 / ((a + vmin) * (a + vmin)));
    Ok(out)
}

/// Parameter vector `(β, A)` as one column.
#[cfg(test)]
pub(crate) fn pack(params: &UniParams) -> DVector<f64> {
    let m = params.beta.len();
    DVector::from_fn(m + 1, |j, _| if j < m { params.beta[j] } else { params.a })
}

#[cfg(test)]
pub(crate) fn unpack(theta: &DVector<f64>) -> UniParams {
    let m = theta.len() - 1;
    UniParams { beta: theta.rows(0, m).into_owned(), a: theta[m] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::EmConfig;
    use crate::diagnostics::mean_sd;
    use crate::stats::{is_positive_definite, standard_normal, RngStream};
    use crate::uni::{loglik_obs_uni, run_em_uni};

    fn random_instance(rng: &mut RngStream, k: usize) -> UniData {
        let y: Vec<f64> = (0..k).map(|_| 3.0 * standard_normal(rng)).collect();
        let v: Vec<f64> = (0..k).map(|_| 0.3 + 1.5 * standard_normal(rng).abs()).collect();
        let x = DMatrix::from_fn(k, 2, |i, j| if j == 0 { 1.0 } else { (i as f64 * 0.9).sin() });
        UniData::new(y, v, x).unwrap()
    }

    fn random_params(rng: &mut RngStream) -> UniParams {
        UniParams::new(
            vec![standard_normal(rng), standard_normal(rng)],
            0.2 + 1.5 * standard_normal(rng).abs(),
        )
    }

    /// Central-difference Hessian of `f` at `theta`.
    fn numerical_hessian(f: impl Fn(&DVector<f64>) -> f64, theta: &DVector<f64>, h: f64) -> DMatrix<f64> {
        let n = theta.len();
        let shifted = |i: usize, si: f64, j: usize, sj: f64| {
            let mut t = theta.clone();
            t[i] += si * h;
            t[j] += sj * h;
            f(&t)
        };
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                let mut up = theta.clone();
                up[i] += h;
                let mut down = theta.clone();
                down[i] -= h;
                (f(&up) - 2.0 * f(theta) + f(&down)) / (h * h)
            } else {
                (shifted(i, 1.0, j, 1.0) - shifted(i, 1.0, j, -1.0) - shifted(i, -1.0, j, 1.0)
                    + shifted(i, -1.0, j, -1.0))
                    / (4.0 * h * h)
            }
        })
    }

    #[test]
    fn homoscedastic_beta_entry() {
        let d = UniData::intercept_only(vec![0.3, 1.0, -0.4, 2.0, 0.0], vec![2.0; 5]).unwrap();
        let info = fisher_obs_uni(&d, &UniParams::new(vec![0.1], 3.0));
        assert!((info[(0, 0)] - 5.0 / 5.0).abs() < 1e-15);
        let dta = aug_info_uni(&d, &UniParams::new(vec![0.1], 3.0), Scheme::Dta).unwrap();
        assert!((dta - &info).amax() < 1e-14);
    }

    #[test]
    fn cross_block_vanishes_without_residuals() {
        let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let beta = vec![0.5, -0.25];
        let y: Vec<f64> = (0..6).map(|i| 0.5 - 0.25 * i as f64).collect();
        let v = vec![1.0, 2.0, 3.0, 1.5, 0.5, 4.0];
        let d = UniData::new(y, v.clone(), x).unwrap();
        let params = UniParams::new(beta, 1.3);
        let info = fisher_obs_uni(&d, &params);
        assert!(info[(0, 2)].abs() < 1e-15 && info[(1, 2)].abs() < 1e-15);
        // DTA A-entry with the fitted values equal to the data.
        let (_, var) = dta_aug_moments(&d, &params);
        let s = 1.3 + 0.5;
        let expected = -3.0 / (s * s) + var.sum() / (s * s * s);
        let dta = aug_info_uni(&d, &params, Scheme::Dta).unwrap();
        assert!((dta[(2, 2)] - expected).abs() < 1e-12);
    }

    #[test]
    fn observed_information_matches_numerical_hessian() {
        let mut rng = RngStream::new(31);
        for _ in 0..50 {
            let d = random_instance(&mut rng, 8);
            let params = random_params(&mut rng);
            let h = numerical_hessian(|t| loglik_obs_uni(&d, &unpack(t)), &pack(&params), 1e-5);
            let info = fisher_obs_uni(&d, &params);
            let rel = (&info + &h).norm() / info.norm();
            assert!(rel < 1e-4, "relative error {rel}");
        }
    }

    #[test]
    fn augmented_information_matches_monte_carlo() {
        let mut rng = RngStream::new(32);
        let d = UniData::intercept_only(vec![1.5, -0.3, 2.2, 0.7, -1.4], vec![1.0, 2.5, 4.0, 1.7, 3.1])
            .unwrap();
        let params = UniParams::new(vec![0.4], 1.6);
        let theta = pack(&params);
        for scheme in [Scheme::Dta, Scheme::Da] {
            let (mean, var) = match scheme {
                Scheme::Dta => dta_aug_moments(&d, &params),
                Scheme::Da => da_moments(&d, &params),
            };
            let extra = if scheme == Scheme::Dta { d.vmin() } else { 0.0 };
            let n = 100_000;
            let mut samples: Vec<DMatrix<f64>> = Vec::with_capacity(n);
            for _ in 0..n {
                let z: Vec<f64> =
                    (0..5).map(|i| mean[i] + var[i].sqrt() * standard_normal(&mut rng)).collect();
                let complete = |t: &DVector<f64>| {
                    let p = unpack(t);
                    let s = p.a + extra;
                    z.iter()
                        .map(|zi| -0.5 * (s.ln() + (zi - p.beta[0]).powi(2) / s))
                        .sum::<f64>()
                };
                samples.push(-numerical_hessian(complete, &theta, 1e-4));
            }
            let exact = aug_info_uni(&d, &params, scheme).unwrap();
            for r in 0..2 {
                for c in 0..2 {
                    let xs: Vec<f64> = samples.iter().map(|s| s[(r, c)]).collect();
                    let (m, sd) = mean_sd(&xs);
                    let se = sd / (n as f64).sqrt();
                    assert!((m - exact[(r, c)]).abs() < 4.0 * se + 1e-6, "{scheme:?} ({r},{c}) {m} vs {}", exact[(r, c)]);
                }
            }
        }
    }

    #[test]
    fn da_information_needs_positive_variance() {
        let d = UniData::intercept_only(vec![0.3, 1.0, -0.4, 2.0, 0.0], vec![2.0, 1.0, 3.0, 2.0, 1.0]).unwrap();
        assert!(aug_info_uni(&d, &UniParams::new(vec![0.0], 0.0), Scheme::Da).is_err());
        assert!(aug_info_uni(&d, &UniParams::new(vec![0.0], 0.0), Scheme::Dta).is_ok());
    }

    #[test]
    fn rate_is_zero_without_missing_information() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let r = matrix_rate(&p, &p).unwrap();
        assert!(r.rate.amax() < 1e-15);
        assert!(r.spectral_radius < 1e-15);
        assert!(matrix_rate(&p, &DMatrix::zeros(2, 2)).is_err());
    }

    fn sorted_eigs(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
        let mut e: Vec<(f64, f64)> = m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
        e.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        e
    }

    #[test]
    fn rate_spectrum_invariant_under_congruence() {
        let mut rng = RngStream::new(33);
        for _ in 0..50 {
            let g = |rng: &mut RngStream| DMatrix::from_fn(3, 3, |_, _| standard_normal(rng));
            let a = g(&mut rng);
            let p = &a * a.transpose() + DMatrix::identity(3, 3);
            let b = g(&mut rng);
            let q = &b * b.transpose() + DMatrix::identity(3, 3) * 2.0;
            let s = g(&mut rng) + DMatrix::identity(3, 3) * 3.0;
            let r1 = matrix_rate(&p, &q).unwrap();
            let r2 = matrix_rate(&(&s * &p * s.transpose()), &(&s * &q * s.transpose())).unwrap();
            for (x, y) in sorted_eigs(&r1.rate).iter().zip(sorted_eigs(&r2.rate)) {
                assert!((x.0 - y.0).abs() < 1e-8 && (x.1 - y.1).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gap_is_positive_definite_and_vanishes_with_vmin() {
        let mut rng = RngStream::new(34);
        for _ in 0..1000 {
            let d = random_instance(&mut rng, 7);
            let gap = expected_info_gap(&d, &random_params(&mut rng)).unwrap();
            assert!(is_positive_definite(&gap));
        }
        let tiny = UniData::intercept_only(vec![0.1, 0.2, 0.3, 0.4], vec![1e-300, 1.0, 2.0, 3.0]).unwrap();
        let gap = expected_info_gap(&tiny, &UniParams::new(vec![0.0], 1.0)).unwrap();
        assert!(gap.amax() < 1e-200);
    }

    #[test]
    fn gap_matches_monte_carlo_over_datasets() {
        let mut rng = RngStream::new(35);
        let v = vec![1.0, 2.5, 4.0, 1.7, 3.1, 0.9, 2.2];
        let x = DMatrix::from_fn(7, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / 7.0 });
        let params = UniParams::new(vec![0.5, -1.0], 1.4);
        let template = UniData::new(vec![0.0; 7], v.clone(), x.clone()).unwrap();
        let exact = expected_info_gap(&template, &params).unwrap();
        let fitted = template.fitted(&params.beta);
        let n = 20_000;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let y: Vec<f64> = (0..7)
                .map(|i| fitted[i] + (params.a + v[i]).sqrt() * standard_normal(&mut rng))
                .collect();
            let d = UniData::new(y, v.clone(), x.clone()).unwrap();
            samples.push(aug_info_uni(&d, &params, Scheme::Da).unwrap() - aug_info_uni(&d, &params, Scheme::Dta).unwrap());
        }
        for r in 0..3 {
            for c in 0..3 {
                let xs: Vec<f64> = samples.iter().map(|s| s[(r, c)]).collect();
                let (m, sd) = mean_sd(&xs);
                assert!((m - exact[(r, c)]).abs() <= 4.0 * sd / (n as f64).sqrt() + 1e-12, "({r},{c}) {m} vs {}", exact[(r, c)]);
            }
        }
    }

    /// At an interior maximum, `I_aug^DA ⪰ I_aug^DTA` implies the DTA rate
    /// has the smaller spectral radius.
    #[test]
    fn dta_radius_not_larger_when_gap_is_positive_definite() {
        let mut rng = RngStream::new(36);
        let mut checked = 0;
        for _ in 0..100 {
            let d = random_instance(&mut rng, 12);
            let em = run_em_uni(&d, Scheme::Dta, &EmConfig::default().with_stop(crate::chain::StopRule::ParamChange)).unwrap();
            let mle = em.last().clone();
            if !(mle.a > 1e-6) {
                continue;
            }
            let obs = fisher_obs_uni(&d, &mle);
            let dta = aug_info_uni(&d, &mle, Scheme::Dta).unwrap();
            let da = aug_info_uni(&d, &mle, Scheme::Da).unwrap();
            if !is_positive_definite(&(&da - &dta)) {
                continue;
            }
            let r_dta = matrix_rate(&obs, &dta).unwrap().spectral_radius;
            let r_da = matrix_rate(&obs, &da).unwrap().spectral_radius;
            assert!(r_dta <= r_da + 1e-10, "{r_dta} > {r_da}");
            checked += 1;
        }
        assert!(checked > 10);
    }
}
