//! Fixed-gain (steady-state) Kalman predictor used as each loop's internal
//! model, and the discrete algebraic Riccati solver that fixes its gain.
//!
//! The observed system is
//!
//! ```text
//! x' = A x + B u + G w        w ~ (0, qw)
//! y  = C x + D u + H w + v    v ~ (0, rv)
//! ```
//!
//! No noise is ever sampled; the covariances only shape the gain.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::lti::StateSpaceModel;

pub const DARE_TOLERANCE: f64 = 1e-14;
pub const DARE_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("Riccati iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },
    #[error("measurement noise variance must be positive, got {0}")]
    NonPositiveMeasurementNoise(f64),
    #[error("process noise variance must be non-negative, got {0}")]
    NegativeProcessNoise(f64),
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("noise parameter is not finite: {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DareSolution {
    /// Steady-state prediction error covariance.
    pub p: DMatrix<f64>,
    /// Predictor gain `A P C^T (C P C^T + r)^-1`.
    pub gain: DVector<f64>,
    pub iterations: usize,
}

/// Solves `P = A P A^T - A P C^T (C P C^T + r)^-1 C P A^T + Q` by fixed-point
/// iteration from `P = Q`.
pub fn solve_dare(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q_eff: &DMatrix<f64>,
    r: f64,
) -> Result<DareSolution, EstimatorError> {
    let n = a.nrows();
    solve_dare_with_cross(a, c, q_eff, r, &DVector::zeros(n))
}

/// Riccati fixed point with a cross covariance `s` between process and
/// measurement noise. The gain becomes `(A P C^T + s)(C P C^T + r)^-1`.
pub fn solve_dare_with_cross(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q_eff: &DMatrix<f64>,
    r: f64,
    s: &DVector<f64>,
) -> Result<DareSolution, EstimatorError> {
    let n = a.nrows();
    if a.ncols() != n || c.nrows() != 1 || c.ncols() != n || q_eff.shape() != (n, n) || s.len() != n {
        return Err(EstimatorError::Dimension(format!(
            "A {:?}, C {:?}, Q {:?}, S {}",
            a.shape(),
            c.shape(),
            q_eff.shape(),
            s.len()
        )));
    }
    if !(r > 0.0) {
        return Err(EstimatorError::NonPositiveMeasurementNoise(r));
    }

    let gain_of = |p: &DMatrix<f64>| -> (DVector<f64>, f64) {
        let innovation_var = (c * p * c.transpose())[(0, 0)] + r;
        let k = (a * p * c.transpose()).column(0) + s;
        (k / innovation_var, innovation_var)
    };

    let mut p = q_eff.clone();
    let mut last_change = f64::INFINITY;
    for iteration in 1..=DARE_MAX_ITERATIONS {
        let (gain, innovation_var) = gain_of(&p);
        let next = a * &p * a.transpose() - &gain * gain.transpose() * innovation_var + q_eff;
        // Keep the iterate symmetric against rounding drift.
        let next = (&next + next.transpose()) * 0.5;
        last_change = (&next - &p).amax();
        p = next;
        if !last_change.is_finite() {
            break;
        }
        if last_change < DARE_TOLERANCE {
            let (gain, _) = gain_of(&p);
            return Ok(DareSolution {
                p,
                gain,
                iterations: iteration,
            });
        }
    }
    Err(EstimatorError::NotConverged {
        iterations: DARE_MAX_ITERATIONS,
        last_change,
    })
}

/// Right-hand side of the Riccati equation minus `p`, as a max-abs residual.
pub fn dare_residual(a: &DMatrix<f64>, c: &DMatrix<f64>, q_eff: &DMatrix<f64>, r: f64, p: &DMatrix<f64>) -> f64 {
    let apc = a * p * c.transpose();
    let cpc = (c * p * c.transpose())[(0, 0)] + r;
    let rhs = a * p * a.transpose() - &apc * apc.transpose() / cpc + q_eff;
    (rhs - p).amax()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub g: Vec<f64>,
    pub h: f64,
    pub qw: f64,
    pub rv: f64,
}

impl NoiseModel {
    pub fn validate(&self, order: usize) -> Result<(), EstimatorError> {
        if let Some(v) = self.g.iter().chain([&self.h, &self.qw, &self.rv]).find(|v| !v.is_finite()) {
            return Err(EstimatorError::NonFinite(*v));
        }
        if self.g.len() != order {
            return Err(EstimatorError::Dimension(format!(
                "G has {} entries, model order is {order}",
                self.g.len()
            )));
        }
        if self.qw < 0.0 {
            return Err(EstimatorError::NegativeProcessNoise(self.qw));
        }
        if self.rv <= 0.0 {
            return Err(EstimatorError::NonPositiveMeasurementNoise(self.rv));
        }
        Ok(())
    }

    /// `G qw G^T`.
    pub fn process_covariance(&self) -> DMatrix<f64> {
        let g = DVector::from_column_slice(&self.g);
        &g * g.transpose() * self.qw
    }

    /// `H qw H + rv`.
    pub fn measurement_variance(&self) -> f64 {
        self.h * self.qw * self.h + self.rv
    }

    /// `G qw H`.
    pub fn cross_covariance(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.g) * (self.qw * self.h)
    }
}

/// Internal model plus its precomputed steady-state predictor gain.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanConfig {
    model: StateSpaceModel,
    noise: NoiseModel,
    gain: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl KalmanConfig {
    pub fn new(model: StateSpaceModel, noise: NoiseModel) -> Result<Self, EstimatorError> {
        noise.validate(model.order())?;
        let c = DMatrix::from_row_slice(1, model.order(), model.c().as_slice());
        let sol = solve_dare_with_cross(
            model.a(),
            &c,
            &noise.process_covariance(),
            noise.measurement_variance(),
            &noise.cross_covariance(),
        )?;
        Ok(Self {
            model,
            noise,
            gain: sol.gain,
            covariance: sol.p,
        })
    }

    pub fn model(&self) -> &StateSpaceModel {
        &self.model
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn gain(&self) -> &DVector<f64> {
        &self.gain
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Spectral radius of the error dynamics `A - L C`.
    pub fn error_dynamics_radius(&self) -> f64 {
        let a = self.model.a();
        let lc = &self.gain * self.model.c();
        (a - lc)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Predicts the output from the incoming estimate, corrects with the
    /// innovation `y - yhat` and advances one sample.
    ///
    /// Returns the new state, the estimated output `C xhat'` that is fed
    /// back to the loop's error junction, and the prediction `yhat`.
    pub fn step(&self, state: &KalmanState, u: f64, y: f64) -> (KalmanState, f64, f64) {
        let m = &self.model;
        let yhat = m.c().dot(&state.xhat.transpose()) + m.d() * u;
        let innovation = y - yhat;
        let xhat = m.a() * &state.xhat + m.b() * u + &self.gain * innovation;
        let estimate = m.c().dot(&xhat.transpose());
        (KalmanState { xhat }, estimate, yhat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub xhat: DVector<f64>,
}

impl KalmanState {
    pub fn zeros(n: usize) -> Self {
        Self {
            xhat: DVector::zeros(n),
        }
    }
}
