//! Parallel-form discrete PID with a first-order filtered derivative.
//!
//! Both the integrator and the derivative filter use forward Euler:
//!
//! ```text
//! dterm  = N * (Kd * e - dfilt)
//! u      = Kp * e + integ + dterm
//! integ' = integ + Ki * Ts * e
//! dfilt' = dfilt + Ts * dterm
//! ```
//!
//! There is no anti-windup and no output saturation.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PidError {
    #[error("sample time must be positive, got {0}")]
    NonPositiveSampleTime(f64),
    #[error("derivative filter coefficient must be positive when kd != 0, got {0}")]
    NonPositiveFilter(f64),
    #[error("gain `{name}` is not finite: {value}")]
    NonFinite { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidConfig {
    pub kp: f64,
    /// Integral gain, 1/s.
    pub ki: f64,
    /// Derivative gain, s.
    pub kd: f64,
    /// Derivative filter coefficient, 1/s.
    pub filter_n: f64,
    /// Sample time, s.
    pub ts: f64,
}

impl PidConfig {
    pub fn new(kp: f64, ki: f64, kd: f64, filter_n: f64, ts: f64) -> Result<Self, PidError> {
        let cfg = Self {
            kp,
            ki,
            kd,
            filter_n,
            ts,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PidError> {
        for (name, value) in [
            ("kp", self.kp),
            ("ki", self.ki),
            ("kd", self.kd),
            ("n", self.filter_n),
            ("ts", self.ts),
        ] {
            if !value.is_finite() {
                return Err(PidError::NonFinite { name, value });
            }
        }
        if self.ts <= 0.0 {
            return Err(PidError::NonPositiveSampleTime(self.ts));
        }
        if self.kd != 0.0 && self.filter_n <= 0.0 {
            return Err(PidError::NonPositiveFilter(self.filter_n));
        }
        Ok(())
    }

    /// Computes the command for error `e` and returns the advanced state.
    pub fn step(&self, state: PidState, e: f64) -> (PidState, f64) {
        let dterm = self.filter_n * (self.kd * e - state.dfilt);
        let u = self.kp * e + state.integ + dterm;
        let next = PidState {
            integ: state.integ + self.ki * self.ts * e,
            dfilt: state.dfilt + self.ts * dterm,
        };
        (next, u)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidState {
    pub integ: f64,
    pub dfilt: f64,
}

impl PidState {
    pub fn reset(self) -> Self {
        PidState::default()
    }
}
