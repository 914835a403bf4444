//! Declarative description of one experiment: the shared plant, the posture
//! and movement loops, the external disturbance and the time grid.
//!
//! A [`SimConfig`] holds only user-facing parameters. Derived quantities
//! (state-space realizations, Kalman gains, grid-indexed signals) are built
//! by [`SimConfig::compile`].

use std::fmt;

use thiserror::Error;

use crate::controllers::PidConfig;
use crate::estimator::{KalmanConfig, NoiseModel};
use crate::lti::{tf_to_ss, LtiState, StateSpaceModel};
use crate::signals::{grid_index, grid_len, GridSignal, SignalSpec};

/// Validation failure, tagged with the dotted parameter path at fault
/// (for example `posture.kp` or `plant.den`).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoopName {
    Posture,
    Movement,
}

impl LoopName {
    pub const ALL: [LoopName; 2] = [LoopName::Posture, LoopName::Movement];

    pub fn as_str(self) -> &'static str {
        match self {
            LoopName::Posture => "posture",
            LoopName::Movement => "movement",
        }
    }
}

impl fmt::Display for LoopName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Transfer function coefficients, highest power first.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl PlantSpec {
    /// `1 / (z + 0.5)`.
    pub fn paper() -> Self {
        Self {
            num: vec![1.0],
            den: vec![1.0, 0.5],
        }
    }

    pub fn realize(&self, field: &str) -> Result<StateSpaceModel, ConfigError> {
        if self.den.len() < 2 {
            return Err(ConfigError::new(
                format!("{field}.den"),
                "denominator must have degree >= 1",
            ));
        }
        tf_to_ss(&self.num, &self.den).map_err(|e| ConfigError::new(format!("{field}.den"), e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Derivative filter coefficient.
    pub n: f64,
}

impl PidGains {
    pub fn paper() -> Self {
        Self {
            kp: 0.5,
            ki: 1.0,
            kd: 0.0,
            n: 100.0,
        }
    }
}

/// One control loop: planner target, pre-controller injection (APA),
/// controller gains and the observer's noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSpec {
    pub target: SignalSpec,
    pub apa: SignalSpec,
    pub pid: PidGains,
    pub noise: NoiseModel,
    /// Observer's internal plant model. `None` means the true plant.
    pub internal_model: Option<PlantSpec>,
}

impl LoopSpec {
    pub fn paper(target: SignalSpec) -> Self {
        Self {
            target,
            apa: SignalSpec::zero(),
            pid: PidGains::paper(),
            noise: default_noise(),
            internal_model: None,
        }
    }
}

/// Process noise variance used when a scenario does not set `qw`.
pub const DEFAULT_QW: f64 = 0.05;

pub fn default_noise() -> NoiseModel {
    NoiseModel {
        g: vec![0.2],
        h: 0.0,
        qw: DEFAULT_QW,
        rv: 1.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Trace grid spacing, s.
    pub ts: f64,
    /// Simulated span, s. The trace has `floor(duration / ts) + 1` rows.
    pub duration: f64,
    /// Sample period of the plant, controllers and observers, s. Must be an
    /// integer multiple of `ts`; between control instants every discrete
    /// block holds its output.
    pub control_period: f64,
    pub plant: PlantSpec,
    pub initial_plant_state: Vec<f64>,
    pub posture: LoopSpec,
    pub movement: LoopSpec,
    /// Added to the plant output; does not enter the plant state.
    pub disturbance: SignalSpec,
}

impl Default for SimConfig {
    /// Posture target `step 0 1`, no movement, no APA, no disturbance.
    fn default() -> Self {
        Self {
            ts: 0.01,
            duration: 10.0,
            control_period: 1.0,
            plant: PlantSpec::paper(),
            initial_plant_state: vec![0.0],
            posture: LoopSpec::paper(SignalSpec::Step {
                onset: 0.0,
                amplitude: 1.0,
            }),
            movement: LoopSpec::paper(SignalSpec::zero()),
            disturbance: SignalSpec::zero(),
        }
    }
}

/// Notice that an event time was moved onto the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapWarning {
    pub field: String,
    pub from: f64,
    pub to: f64,
}

impl fmt::Display for SnapWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: event time {} snapped to grid sample {}", self.field, self.from, self.to)
    }
}

impl SimConfig {
    pub fn loop_spec(&self, name: LoopName) -> &LoopSpec {
        match name {
            LoopName::Posture => &self.posture,
            LoopName::Movement => &self.movement,
        }
    }

    pub fn loop_spec_mut(&mut self, name: LoopName) -> &mut LoopSpec {
        match name {
            LoopName::Posture => &mut self.posture,
            LoopName::Movement => &mut self.movement,
        }
    }

    /// Number of trace rows.
    pub fn steps(&self) -> usize {
        grid_len(self.ts, self.duration)
    }

    /// Control period in trace samples.
    pub fn control_stride(&self) -> Result<usize, ConfigError> {
        let ratio = self.control_period / self.ts;
        let k = ratio.round();
        if !(k >= 1.0) || (ratio - k).abs() > 1e-9 * k {
            return Err(ConfigError::new(
                "simulation.control_period",
                format!(
                    "must be a positive integer multiple of ts = {}, got {}",
                    self.ts, self.control_period
                ),
            ));
        }
        Ok(k as usize)
    }

    /// Moves every event time that is not already a grid sample onto the
    /// nearest one. Times already on the grid keep their exact value.
    pub fn snap_to_grid(&mut self) -> Vec<SnapWarning> {
        let ts = self.ts;
        let mut warnings = Vec::new();
        let mut snap_signal = |field: String, s: &SignalSpec| {
            s.map_times(&mut |t| {
                let k = grid_index(t, ts);
                if (t / ts - k as f64).abs() <= 1e-9 * (k.unsigned_abs() as f64).max(1.0) {
                    t
                } else {
                    let to = k as f64 * ts;
                    warnings.push(SnapWarning {
                        field: field.clone(),
                        from: t,
                        to,
                    });
                    to
                }
            })
        };
        for name in LoopName::ALL {
            let l = self.loop_spec(name).clone();
            let target = snap_signal(format!("{name}.target"), &l.target);
            let apa = snap_signal(format!("{name}.apa"), &l.apa);
            let spec = self.loop_spec_mut(name);
            spec.target = target;
            spec.apa = apa;
        }
        self.disturbance = snap_signal("disturbance.signal".into(), &self.disturbance.clone());
        warnings
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.compile().map(|_| ())
    }

    /// Checks every invariant and builds the runnable form.
    pub fn compile(&self) -> Result<CompiledSim, ConfigError> {
        let finite_positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be positive and finite, got {v}")))
            }
        };
        finite_positive("simulation.ts", self.ts)?;
        finite_positive("simulation.duration", self.duration)?;
        finite_positive("simulation.control_period", self.control_period)?;
        if self.duration < self.ts {
            return Err(ConfigError::new(
                "simulation.duration",
                format!("must be at least ts = {}", self.ts),
            ));
        }
        let stride = self.control_stride()?;

        let plant = self.plant.realize("plant")?;
        if self.initial_plant_state.len() != plant.order() {
            return Err(ConfigError::new(
                "plant.x0",
                format!(
                    "needs {} entries for the plant order, got {}",
                    plant.order(),
                    self.initial_plant_state.len()
                ),
            ));
        }
        if let Some(v) = self.initial_plant_state.iter().find(|v| !v.is_finite()) {
            return Err(ConfigError::new("plant.x0", format!("not finite: {v}")));
        }

        self.disturbance
            .validate()
            .map_err(|e| ConfigError::new("disturbance.signal", e))?;

        let mut loops = Vec::with_capacity(2);
        for name in LoopName::ALL {
            let spec = self.loop_spec(name);
            spec.target
                .validate()
                .map_err(|e| ConfigError::new(format!("{name}.target"), e))?;
            spec.apa
                .validate()
                .map_err(|e| ConfigError::new(format!("{name}.apa"), e))?;
            let pid = PidConfig::new(
                spec.pid.kp,
                spec.pid.ki,
                spec.pid.kd,
                spec.pid.n,
                self.control_period,
            )
            .map_err(|e| ConfigError::new(format!("{name}.pid"), e))?;
            let (model, mismatch) = match &spec.internal_model {
                Some(m) => {
                    let model = m.realize(&format!("{name}.model"))?;
                    let mismatch = model != plant;
                    (model, mismatch)
                }
                None => (plant.clone(), false),
            };
            let kalman = KalmanConfig::new(model, spec.noise.clone())
                .map_err(|e| ConfigError::new(format!("{name}.noise"), e))?;
            loops.push(CompiledLoop {
                name,
                target: spec.target.on_grid(self.ts),
                apa: spec.apa.on_grid(self.ts),
                pid,
                kalman,
                model_mismatch: mismatch,
            });
        }
        let movement = loops.pop().expect("two loops");
        let posture = loops.pop().expect("two loops");

        Ok(CompiledSim {
            ts: self.ts,
            control_period: self.control_period,
            steps: self.steps(),
            control_stride: stride,
            plant,
            initial_state: LtiState::from_slice(&self.initial_plant_state),
            loops: [posture, movement],
            disturbance: self.disturbance.on_grid(self.ts),
        })
    }
}

#[derive(Debug, Clone)]
pub struct CompiledLoop {
    pub name: LoopName,
    pub target: GridSignal,
    pub apa: GridSignal,
    pub pid: PidConfig,
    pub kalman: KalmanConfig,
    pub model_mismatch: bool,
}

/// Validated configuration with realized models, gains and grid signals.
#[derive(Debug, Clone)]
pub struct CompiledSim {
    pub ts: f64,
    pub control_period: f64,
    pub steps: usize,
    pub control_stride: usize,
    pub plant: StateSpaceModel,
    pub initial_state: LtiState,
    pub loops: [CompiledLoop; 2],
    pub disturbance: GridSignal,
}
