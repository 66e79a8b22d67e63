use nalgebra::{DMatrix, DVector};

use super::{da_moments_multi, dta_aug_moments_multi, loglik_obs_multi, MultiData, MultiParams};
use crate::chain::{EmConfig, EmTrace, Scheme};
use crate::error::Result;
use crate::stats::{is_positive_definite, symmetrize, SymPosDef};

/// `β' = OLS(mean)` and `(1/k) Σ {r_i r_iᵀ + cov_i} - shift`.
fn m_step(
    data: &MultiData,
    mean: &[DVector<f64>],
    cov: &[DMatrix<f64>],
    shift: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let p = data.p();
    let beta_mat = data.ols(mean);
    let beta = DVector::from_column_slice(beta_mat.as_slice());
    let mut second = DMatrix::zeros(p, p);
    for i in 0..data.k() {
        let r = &mean[i] - data.fitted(i, &beta);
        second += &r * r.transpose() + &cov[i];
    }
    let a = symmetrize(&(second / data.k() as f64 - shift));
    (beta, a)
}

/// EM for the posterior mode of `(β, A)` in the multivariate model.
///
/// Under [`Scheme::Dta`] the `A` update subtracts `V_min` and falls back to
/// the zero matrix whenever the result is not positive definite. Under
/// [`Scheme::Da`] the update is the plain second moment of the random
/// effects. Default start is `β = 0`, `A = I`.
pub fn run_em_multi(
    data: &MultiData,
    scheme: Scheme,
    cfg: &EmConfig<MultiParams>,
) -> Result<EmTrace<MultiParams>> {
    cfg.validate()?;
    let p = data.p();
    let init = match &cfg.init {
        Some(init) => init.clone(),
        None => MultiParams { beta: DVector::zeros(data.m() * p), a: SymPosDef::identity(p) },
    };
    init.check(data)?;
    let mut trace = EmTrace {
        loglik: vec![loglik_obs_multi(data, &init)?],
        iterates: vec![init],
        converged: false,
        n_iter: 0,
    };
    for iter in 1..=cfg.max_iter {
        let current = trace.last();
        let next = match scheme {
            Scheme::Dta => {
                let (mu, cov) = dta_aug_moments_multi(data, current);
                let (beta, a_temp) = m_step(data, &mu, &cov, &data.shrink().vmin);
                let a = if is_positive_definite(&a_temp) {
                    SymPosDef::new_semidefinite(a_temp)?
                } else {
                    SymPosDef::zeros(p)
                };
                MultiParams { beta, a }
            }
            Scheme::Da => {
                let (mu, cov) = da_moments_multi(data, current);
                let (beta, a) = m_step(data, &mu, &cov, &DMatrix::zeros(p, p));
                MultiParams { beta, a: SymPosDef::new_semidefinite(a)? }
            }
        };
        let change = next.max_abs_diff(current);
        let prev = *trace.loglik.last().unwrap();
        trace.loglik.push(loglik_obs_multi(data, &next)?);
        trace.iterates.push(next);
        trace.n_iter = iter;
        if cfg.is_converged(change, prev, *trace.loglik.last().unwrap()) {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi::tests::random_instance;
    use crate::stats::{standard_normal, RngStream};
    use crate::uni::{run_em_uni, UniData, UniParams};

    /// Instances are drawn with an interior `A`; on boundary instances the
    /// reset to the zero matrix can lower the likelihood.
    #[test]
    fn monotone_on_random_instances() {
        let mut rng = RngStream::new(21);
        for _ in 0..50 {
            let d = random_instance(2, 20, &mut rng);
            for scheme in [Scheme::Dta, Scheme::Da] {
                let t = run_em_multi(&d, scheme, &EmConfig::default().with_max_iter(3000)).unwrap();
                assert!(t.iterates.iter().all(|p| p.a.matrix().amax() > 0.0));
                assert!(t.max_loglik_drop() <= 1e-8, "{scheme:?} drop {}", t.max_loglik_drop());
            }
        }
    }

    #[test]
    fn scalar_case_reproduces_univariate_trace() {
        let mut rng = RngStream::new(22);
        for _ in 0..20 {
            let k = 9;
            let y: Vec<f64> = (0..k).map(|_| 2.0 * standard_normal(&mut rng)).collect();
            let v: Vec<f64> = (0..k).map(|_| 0.3 + 3.0 * standard_normal(&mut rng).abs()).collect();
            let x = DMatrix::from_fn(k, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / 3.0 });
            let uni = UniData::new(y.clone(), v.clone(), x.clone()).unwrap();
            let multi = MultiData::new(
                y.iter().map(|&z| DVector::from_element(1, z)).collect(),
                v.iter().map(|&z| SymPosDef::new(DMatrix::from_element(1, 1, z)).unwrap()).collect(),
                x,
            )
            .unwrap();
            for scheme in [Scheme::Dta, Scheme::Da] {
                let cfg_u = EmConfig::<UniParams>::default().with_max_iter(500);
                let cfg_m = EmConfig::<MultiParams>::default().with_max_iter(500);
                let tu = run_em_uni(&uni, scheme, &cfg_u).unwrap();
                let tm = run_em_multi(&multi, scheme, &cfg_m).unwrap();
                for (u, m) in tu.iterates.iter().zip(&tm.iterates) {
                    assert!((&u.beta - &m.beta).amax() < 1e-10);
                    assert!((u.a - m.a.matrix()[(0, 0)]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn boundary_projection_gives_zero_matrix() {
        // Responses that sit exactly on the regression line leave no room for A.
        let k = 8;
        let y: Vec<DVector<f64>> =
            (0..k).map(|i| DVector::from_vec(vec![1.0 + i as f64, 2.0 - i as f64])).collect();
        let v = (0..k)
            .map(|i| SymPosDef::new(DMatrix::identity(2, 2) * (1.0 + i as f64)).unwrap())
            .collect();
        let x = DMatrix::from_fn(k, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let d = MultiData::new(y, v, x).unwrap();
        let t = run_em_multi(&d, Scheme::Dta, &EmConfig::default().with_max_iter(200)).unwrap();
        assert!(t.last().a.matrix().amax() == 0.0);
    }
}
