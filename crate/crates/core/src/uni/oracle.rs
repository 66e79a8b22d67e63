use nalgebra::DMatrix;

use super::UniData;
use crate::error::{DtaError, Result};

/// Tail density allowed at the grid ends, relative to the peak.
const TAIL_TOL: f64 = 1e-8;

/// A density tabulated on an increasing grid and normalized by the trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GridDensity {
    /// Normalizes `exp(log_density)` over `grid`.
    pub(crate) fn from_log_density(grid: Vec<f64>, log_density: Vec<f64>) -> Result<Self> {
        let peak = log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(DtaError::InvalidInput("density is not finite on the grid".into()));
        }
        let unnorm: Vec<f64> = log_density.iter().map(|l| (l - peak).exp()).collect();
        let mut cumulative = vec![0.0; grid.len()];
        for j in 1..grid.len() {
            cumulative[j] =
                cumulative[j - 1] + 0.5 * (grid[j] - grid[j - 1]) * (unnorm[j] + unnorm[j - 1]);
        }
        let total = *cumulative.last().unwrap();
        Ok(Self {
            density: unnorm.iter().map(|d| d / total).collect(),
            cumulative: cumulative.iter().map(|c| c / total).collect(),
            grid,
        })
    }

    /// Trapezoid integral of the normalized density (1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        let mut s = 0.0;
        for j in 1..self.grid.len() {
            s += 0.5 * (self.grid[j] - self.grid[j - 1]) * (self.density[j] + self.density[j - 1]);
        }
        s
    }

    /// CDF of the piecewise-linear density interpolant.
    pub fn cdf(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g[0] {
            return 0.0;
        }
        if x >= g[g.len() - 1] {
            return 1.0;
        }
        let j = g.partition_point(|&v| v <= x) - 1;
        let t = (x - g[j]) / (g[j + 1] - g[j]);
        let dx = self.density[j] + t * (self.density[j + 1] - self.density[j]);
        self.cumulative[j] + 0.5 * (x - g[j]) * (self.density[j] + dx)
    }

    /// Grid point with the largest density.
    pub fn mode(&self) -> f64 {
        let j = self
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| j)
            .unwrap();
        self.grid[j]
    }

    /// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and this density.
    pub fn ks_distance(&self, sample: &[f64]) -> f64 {
        let mut xs = sample.to_vec();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = self.cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(DtaError::InvalidInput("grid needs at least three points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
        return Err(DtaError::InvalidInput("grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Marginal posterior `p(A | y^obs)` under the flat prior, with `β`
/// integrated out analytically:
/// `log p(A) = -½ Σ log(A + V_i) - ½ log|XᵀWX| - ½ Σ (y_i - x_iᵀβ̂_A)² / (A + V_i)`
/// with `W = diag(1 / (A + V_i))` and `β̂_A` the weighted least-squares fit.
///
/// The grid must be nonnegative and reach far enough that the density at
/// the upper end (and at the lower end unless it is the boundary `A = 0`)
/// is below `1e-8` of the peak.
pub fn grid_oracle_a(data: &UniData, grid: &[f64]) -> Result<GridDensity> {
    check_grid(grid)?;
    if grid[0] < 0.0 {
        return Err(DtaError::InvalidInput("grid for A must be nonnegative".into()));
    }
    let x = data.x();
    let log_density: Vec<f64> = grid
        .iter()
        .map(|&a| {
            let w: Vec<f64> = data.v().iter().map(|v| 1.0 / (a + v)).collect();
            let xw = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * w[i]);
            let gram = x.transpose() * &xw;
            let chol = gram.cholesky().expect("full column rank design");
            let beta = chol.solve(&(xw.transpose() * data.y()));
            let resid = data.y() - x * beta;
            let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let quad: f64 = resid.iter().zip(&w).map(|(r, w)| r * r * w).sum();
            let log_w: f64 = w.iter().map(|w| w.ln()).sum();
            0.5 * log_w - 0.5 * log_det - 0.5 * quad
        })
        .collect();
    let out = GridDensity::from_log_density(grid.to_vec(), log_density)?;
    let peak = out.density.iter().copied().fold(0.0, f64::max);
    let last = *out.density.last().unwrap();
    if last >= TAIL_TOL * peak {
        return Err(DtaError::GridTooNarrow(format!(
            "density at A = {} is {:.3e} of the peak",
            grid[grid.len() - 1],
            last / peak
        )));
    }
    if grid[0] > 0.0 && out.density[0] >= TAIL_TOL * peak {
        return Err(DtaError::GridTooNarrow(format!(
            "density at A = {} is {:.3e} of the peak",
            grid[0],
            out.density[0] / peak
        )));
    }
    Ok(out)
}
