use nalgebra::DMatrix;

use super::{logpdf_approx_joint, ApproxPosterior, BinData, PriorHyper};
use crate::error::{DtaError, Result};
use crate::stats::{log_beta_fn, log_binomial};
use crate::uni::check_grid;

const TAIL_TOL: f64 = 1e-8;

/// A density over `(log α, log β)` tabulated on a rectangular grid and
/// normalized by the two-dimensional trapezoid rule. Rows index `log α`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity2 {
    pub log_alpha: Vec<f64>,
    pub log_beta: Vec<f64>,
    pub density: DMatrix<f64>,
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
            let right = if i + 1 < n { grid[i + 1] - grid[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

impl GridDensity2 {
    /// Normalizes `exp(log_density)`; with `check_tails` the density on the
    /// grid boundary must be below `1e-8` of the peak.
    pub fn from_log_density(
        log_alpha: Vec<f64>,
        log_beta: Vec<f64>,
        log_density: DMatrix<f64>,
        check_tails: bool,
    ) -> Result<Self> {
        check_grid(&log_alpha)?;
        check_grid(&log_beta)?;
        if log_density.shape() != (log_alpha.len(), log_beta.len()) {
            return Err(DtaError::InvalidInput("density shape does not match the grid".into()));
        }
        let peak = log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(DtaError::InvalidInput("density is not finite on the grid".into()));
        }
        let mut density = log_density.map(|l| (l - peak).exp());
        if check_tails {
            let (r, c) = density.shape();
            let edge = (0..r)
                .flat_map(|i| [density[(i, 0)], density[(i, c - 1)]])
                .chain((0..c).flat_map(|j| [density[(0, j)], density[(r - 1, j)]]))
                .fold(0.0, f64::max);
            if edge >= TAIL_TOL {
                return Err(DtaError::GridTooNarrow(format!(
                    "boundary density is {edge:.3e} of the peak"
                )));
            }
        }
        let mut out = Self { log_alpha, log_beta, density: DMatrix::zeros(0, 0) };
        let total = out.integrate(&density);
        density /= total;
        out.density = density;
        Ok(out)
    }

    fn integrate(&self, values: &DMatrix<f64>) -> f64 {
        let wa = trapezoid_weights(&self.log_alpha);
        let wb = trapezoid_weights(&self.log_beta);
        let mut s = 0.0;
        for (i, a) in wa.iter().enumerate() {
            for (j, b) in wb.iter().enumerate() {
                s += a * b * values[(i, j)];
            }
        }
        s
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate(&self.density)
    }

    /// `½ ∫ |p - q|` over the common grid.
    pub fn tv_distance(&self, other: &GridDensity2) -> Result<f64> {
        if self.log_alpha != other.log_alpha || self.log_beta != other.log_beta {
            return Err(DtaError::InvalidInput("densities live on different grids".into()));
        }
        Ok(0.5 * self.integrate(&(&self.density - &other.density).abs()))
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn density_at(&self, la: f64, lb: f64) -> f64 {
        let (ga, gb) = (&self.log_alpha, &self.log_beta);
        if !(la >= ga[0] && la <= ga[ga.len() - 1] && lb >= gb[0] && lb <= gb[gb.len() - 1]) {
            return 0.0;
        }
        let cell = |g: &[f64], x: f64| {
            let i = (g.partition_point(|&v| v <= x) - 1).min(g.len() - 2);
            (i, (x - g[i]) / (g[i + 1] - g[i]))
        };
        let (i, s) = cell(ga, la);
        let (j, t) = cell(gb, lb);
        let d = &self.density;
        (1.0 - s) * (1.0 - t) * d[(i, j)]
            + s * (1.0 - t) * d[(i + 1, j)]
            + (1.0 - s) * t * d[(i, j + 1)]
            + s * t * d[(i + 1, j + 1)]
    }

    /// Density level whose superlevel set holds probability `prob`.
    pub fn hpd_level(&self, prob: f64) -> f64 {
        let wa = trapezoid_weights(&self.log_alpha);
        let wb = trapezoid_weights(&self.log_beta);
        let mut cells: Vec<(f64, f64)> = Vec::with_capacity(self.density.len());
        for (i, a) in wa.iter().enumerate() {
            for (j, b) in wb.iter().enumerate() {
                let d = self.density[(i, j)];
                cells.push((d, d * a * b));
            }
        }
        cells.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut acc = 0.0;
        for (d, mass) in cells {
            acc += mass;
            if acc >= prob {
                return d;
            }
        }
        0.0
    }

    /// Fraction of `(α, β)` draws whose interpolated density reaches the
    /// level of the `prob` highest-density region.
    pub fn hpd_coverage(&self, draws: &[(f64, f64)], prob: f64) -> f64 {
        let level = self.hpd_level(prob);
        let inside =
            draws.iter().filter(|(a, b)| self.density_at(a.ln(), b.ln()) >= level).count();
        inside as f64 / draws.len() as f64
    }

    /// Two-dimensional histogram of `(α, β)` draws on the grid cells, as a
    /// density on the same grid points (nearest-point binning).
    pub fn histogram_like(&self, draws: &[(f64, f64)]) -> Result<GridDensity2> {
        let nearest = |g: &[f64], x: f64| -> Option<usize> {
            if x < g[0] || x > g[g.len() - 1] {
                return None;
            }
            let i = g.partition_point(|&v| v <= x).min(g.len() - 1);
            Some(if i > 0 && (x - g[i - 1]) < (g[i] - x) { i - 1 } else { i })
        };
        let wa = trapezoid_weights(&self.log_alpha);
        let wb = trapezoid_weights(&self.log_beta);
        let mut counts = DMatrix::zeros(self.log_alpha.len(), self.log_beta.len());
        for (a, b) in draws {
            if let (Some(i), Some(j)) = (nearest(&self.log_alpha, a.ln()), nearest(&self.log_beta, b.ln())) {
                counts[(i, j)] += 1.0;
            }
        }
        let total: f64 = counts.sum();
        if total == 0.0 {
            return Err(DtaError::GridTooNarrow("no draws fall on the grid".into()));
        }
        let density = DMatrix::from_fn(counts.nrows(), counts.ncols(), |i, j| {
            counts[(i, j)] / (total * wa[i] * wb[j])
        });
        Ok(GridDensity2 { log_alpha: self.log_alpha.clone(), log_beta: self.log_beta.clone(), density })
    }
}

/// `log L(α, β) = Σ_i [log C(n_i, y_i) + log B(y_i + α, n_i - y_i + β) - log B(α, β)]`.
pub fn loglik_betabin(data: &BinData, alpha: f64, beta: f64) -> Result<f64> {
    let lb0 = log_beta_fn(alpha, beta)?;
    let mut s = 0.0;
    for (&y, &n) in data.y().iter().zip(data.n()) {
        s += log_binomial(n, y) + log_beta_fn(y as f64 + alpha, (n - y) as f64 + beta)? - lb0;
    }
    Ok(s)
}

/// Exact posterior of `(log α, log β)` on a grid: likelihood times the
/// prior times the Jacobian `αβ`.
pub fn exact_grid_posterior(
    data: &BinData,
    prior: &PriorHyper,
    log_alpha: &[f64],
    log_beta: &[f64],
) -> Result<GridDensity2> {
    let mut logd = DMatrix::zeros(log_alpha.len(), log_beta.len());
    for (i, &la) in log_alpha.iter().enumerate() {
        for (j, &lb) in log_beta.iter().enumerate() {
            let (a, b) = (la.exp(), lb.exp());
            logd[(i, j)] = loglik_betabin(data, a, b)? + prior.log_density(a, b) + la + lb;
        }
    }
    GridDensity2::from_log_density(log_alpha.to_vec(), log_beta.to_vec(), logd, true)
}

/// The series approximation `p*` on the same kind of grid, Jacobian
/// included. Tails are not checked.
pub fn approx_grid_posterior(
    ap: &ApproxPosterior,
    log_alpha: &[f64],
    log_beta: &[f64],
) -> Result<GridDensity2> {
    let logd = DMatrix::from_fn(log_alpha.len(), log_beta.len(), |i, j| {
        let (la, lb) = (log_alpha[i], log_beta[j]);
        logpdf_approx_joint(ap, la.exp(), lb.exp()) + la + lb
    });
    GridDensity2::from_log_density(log_alpha.to_vec(), log_beta.to_vec(), logd, false)
}
