//! Built-in datasets and the univariate simulation design.

use nalgebra::{DMatrix, DVector};

use crate::betabin::BinData;
use crate::error::Result;
use crate::multi::MultiData;
use crate::stats::{standard_normal, RngStream, SymPosDef};
use crate::uni::UniData;

/// Hospital profiling data: two quality outcomes per hospital, a severity
/// covariate and the patient count. Columns are `(y1, y2, severity, n)`.
pub const HOSPITAL: [(f64, f64, f64, f64); 27] = [
    (10.18, 15.06, 0.75, 24.0),
    (11.55, 17.97, 0.62, 32.0),
    (16.21, 12.50, 0.66, 32.0),
    (12.31, 14.88, 0.26, 43.0),
    (12.88, 15.21, 0.96, 44.0),
    (11.84, 17.69, 0.44, 45.0),
    (14.82, 16.91, 0.44, 48.0),
    (13.05, 15.07, 0.55, 49.0),
    (12.43, 12.01, 0.33, 51.0),
    (8.35, 9.43, 0.47, 53.0),
    (17.97, 26.82, 0.48, 56.0),
    (11.84, 15.64, 0.34, 58.0),
    (12.43, 13.94, 0.28, 58.0),
    (14.73, 15.40, 0.63, 60.0),
    (15.80, 11.50, 0.26, 61.0),
    (14.81, 20.56, 0.56, 62.0),
    (11.14, 13.02, 0.02, 62.0),
    (17.12, 14.60, 0.41, 66.0),
    (16.93, 16.28, 0.56, 68.0),
    (11.02, 13.52, 0.34, 68.0),
    (14.69, 16.49, 0.56, 72.0),
    (10.48, 14.24, 0.79, 77.0),
    (15.82, 15.13, 0.47, 87.0),
    (12.66, 14.99, 0.71, 122.0),
    (10.41, 17.25, 0.45, 124.0),
    (10.32, 10.13, 0.05, 149.0),
    (13.72, 18.18, 0.77, 198.0),
];

/// Per-patient covariance; hospital `i` has `V_i = V0 / n_i`.
pub const HOSPITAL_V0: [[f64; 2]; 2] = [[148.87, 140.43], [140.43, 490.60]];

/// Base hits and at-bats for ten players.
pub const BASEBALL_Y: [u64; 10] = [5, 4, 3, 1, 4, 4, 3, 3, 1, 1];
pub const BASEBALL_N: [u64; 10] = [12, 10, 9, 3, 13, 14, 12, 12, 6, 8];

/// Hospital data with covariate rows `(1, severity_i)`.
pub fn hospital() -> Result<MultiData> {
    let y = HOSPITAL.iter().map(|r| DVector::from_vec(vec![r.0, r.1])).collect();
    let n: Vec<f64> = HOSPITAL.iter().map(|r| r.3).collect();
    let x = DMatrix::from_fn(HOSPITAL.len(), 2, |i, j| if j == 0 { 1.0 } else { HOSPITAL[i].2 });
    let v0 = SymPosDef::new(DMatrix::from_fn(2, 2, |r, c| HOSPITAL_V0[r][c]))?;
    MultiData::from_common_covariance(y, &v0, &n, x)
}

pub fn baseball() -> BinData {
    BinData::new(BASEBALL_Y.to_vec(), BASEBALL_N.to_vec()).expect("fixture is valid")
}

/// Settings for [`simulate_uni`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniSimulation {
    pub k: usize,
    pub beta: f64,
    pub a: f64,
    pub v_mean: f64,
    pub v_sd: f64,
}

impl Default for UniSimulation {
    fn default() -> Self {
        Self { k: 50, beta: 0.0, a: 5.0, v_mean: 10.0, v_sd: 2.0 }
    }
}

/// Intercept-only data: `V_i ~ N(v_mean, v_sd²)` redrawn while nonpositive,
/// `θ_i ~ N(β, A)`, `y_i ~ N(θ_i, V_i)`.
pub fn simulate_uni(sim: &UniSimulation, seed: u64) -> Result<UniData> {
    let mut rng = RngStream::new(seed);
    let mut v = Vec::with_capacity(sim.k);
    let mut y = Vec::with_capacity(sim.k);
    for _ in 0..sim.k {
        let vi = loop {
            let draw = sim.v_mean + sim.v_sd * standard_normal(&mut rng);
            if draw > 0.0 {
                break draw;
            }
        };
        let theta = sim.beta + sim.a.max(0.0).sqrt() * standard_normal(&mut rng);
        y.push(theta + vi.sqrt() * standard_normal(&mut rng));
        v.push(vi);
    }
    UniData::intercept_only(y, v)
}
