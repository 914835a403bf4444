//! Dotted parameter paths into a [`SimConfig`] and one-dimensional sweeps.
//!
//! Recognized paths:
//!
//! - `simulation.ts`, `simulation.duration`, `simulation.control_period`
//! - `plant.num.<i>`, `plant.den.<i>`, `plant.x0.<i>`
//! - `<loop>.kp`, `<loop>.ki`, `<loop>.kd`, `<loop>.n`, `<loop>.qw`,
//!   `<loop>.rv`, `<loop>.h`, `<loop>.g` (same as `<loop>.g.0`), `<loop>.g.<i>`
//! - `<loop>.target.<leaf>`, `<loop>.apa.<leaf>`, `disturbance.signal.<leaf>`
//!   where `<leaf>` is `amplitude` (also `value`), `onset` or `offset`
//!
//! with `<loop>` one of `posture`, `movement`. Signal leaves address a single
//! constant, step or pulse; sums are not addressable.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, LoopName, SimConfig};
use crate::engine::{compute_metrics, simulate, Metrics, SimError, TraceError};
use crate::signals::SignalSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("unknown parameter path `{0}`")]
    Unknown(String),
    #[error("`{path}`: {message}")]
    NotApplicable { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimLeaf {
    Ts,
    Duration,
    ControlPeriod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantLeaf {
    Num(usize),
    Den(usize),
    X0(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopLeaf {
    Kp,
    Ki,
    Kd,
    N,
    Qw,
    Rv,
    H,
    G(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalLeaf {
    Amplitude,
    Onset,
    Offset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalSlot {
    Target(LoopName),
    Apa(LoopName),
    Disturbance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamPath {
    Simulation(SimLeaf),
    Plant(PlantLeaf),
    Loop(LoopName, LoopLeaf),
    Signal(SignalSlot, SignalLeaf),
}

impl FromStr for ParamPath {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || ParamError::Unknown(s.to_string());
        let parts: Vec<&str> = s.trim().split('.').collect();
        let index = |p: &str| p.parse::<usize>().map_err(|_| unknown());
        let loop_name = |p: &str| match p {
            "posture" => Some(LoopName::Posture),
            "movement" => Some(LoopName::Movement),
            _ => None,
        };
        let signal_leaf = |p: &str| match p {
            "amplitude" | "value" => Ok(SignalLeaf::Amplitude),
            "onset" => Ok(SignalLeaf::Onset),
            "offset" => Ok(SignalLeaf::Offset),
            _ => Err(unknown()),
        };

        match parts.as_slice() {
            ["simulation", leaf] => Ok(ParamPath::Simulation(match *leaf {
                "ts" => SimLeaf::Ts,
                "duration" => SimLeaf::Duration,
                "control_period" => SimLeaf::ControlPeriod,
                _ => return Err(unknown()),
            })),
            ["plant", leaf, i] => Ok(ParamPath::Plant(match *leaf {
                "num" => PlantLeaf::Num(index(i)?),
                "den" => PlantLeaf::Den(index(i)?),
                "x0" => PlantLeaf::X0(index(i)?),
                _ => return Err(unknown()),
            })),
            ["disturbance", "signal", leaf] => Ok(ParamPath::Signal(SignalSlot::Disturbance, signal_leaf(leaf)?)),
            [l, rest @ ..] => {
                let name = loop_name(l).ok_or_else(unknown)?;
                let leaf = match rest {
                    ["kp"] => LoopLeaf::Kp,
                    ["ki"] => LoopLeaf::Ki,
                    ["kd"] => LoopLeaf::Kd,
                    ["n"] => LoopLeaf::N,
                    ["qw"] => LoopLeaf::Qw,
                    ["rv"] => LoopLeaf::Rv,
                    ["h"] => LoopLeaf::H,
                    ["g"] => LoopLeaf::G(0),
                    ["g", i] => LoopLeaf::G(index(i)?),
                    ["target", leaf] => return Ok(ParamPath::Signal(SignalSlot::Target(name), signal_leaf(leaf)?)),
                    ["apa", leaf] => return Ok(ParamPath::Signal(SignalSlot::Apa(name), signal_leaf(leaf)?)),
                    _ => return Err(unknown()),
                };
                Ok(ParamPath::Loop(name, leaf))
            }
            _ => Err(unknown()),
        }
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamPath::Simulation(leaf) => write!(
                f,
                "simulation.{}",
                match leaf {
                    SimLeaf::Ts => "ts",
                    SimLeaf::Duration => "duration",
                    SimLeaf::ControlPeriod => "control_period",
                }
            ),
            ParamPath::Plant(PlantLeaf::Num(i)) => write!(f, "plant.num.{i}"),
            ParamPath::Plant(PlantLeaf::Den(i)) => write!(f, "plant.den.{i}"),
            ParamPath::Plant(PlantLeaf::X0(i)) => write!(f, "plant.x0.{i}"),
            ParamPath::Loop(name, leaf) => {
                write!(f, "{name}.")?;
                match leaf {
                    LoopLeaf::Kp => f.write_str("kp"),
                    LoopLeaf::Ki => f.write_str("ki"),
                    LoopLeaf::Kd => f.write_str("kd"),
                    LoopLeaf::N => f.write_str("n"),
                    LoopLeaf::Qw => f.write_str("qw"),
                    LoopLeaf::Rv => f.write_str("rv"),
                    LoopLeaf::H => f.write_str("h"),
                    LoopLeaf::G(i) => write!(f, "g.{i}"),
                }
            }
            ParamPath::Signal(slot, leaf) => {
                match slot {
                    SignalSlot::Target(name) => write!(f, "{name}.target")?,
                    SignalSlot::Apa(name) => write!(f, "{name}.apa")?,
                    SignalSlot::Disturbance => f.write_str("disturbance.signal")?,
                }
                f.write_str(match leaf {
                    SignalLeaf::Amplitude => ".amplitude",
                    SignalLeaf::Onset => ".onset",
                    SignalLeaf::Offset => ".offset",
                })
            }
        }
    }
}

impl ParamPath {
    /// Writes `value` into the addressed leaf. The result is not validated.
    pub fn apply(&self, config: &mut SimConfig, value: f64) -> Result<(), ParamError> {
        let not_applicable = |message: String| ParamError::NotApplicable {
            path: self.to_string(),
            message,
        };
        let slot = |v: &mut Vec<f64>, i: usize| -> Result<(), ParamError> {
            let len = v.len();
            let entry = v
                .get_mut(i)
                .ok_or_else(|| not_applicable(format!("index {i} out of range for {len} entries")))?;
            *entry = value;
            Ok(())
        };
        match *self {
            ParamPath::Simulation(SimLeaf::Ts) => config.ts = value,
            ParamPath::Simulation(SimLeaf::Duration) => config.duration = value,
            ParamPath::Simulation(SimLeaf::ControlPeriod) => config.control_period = value,
            ParamPath::Plant(PlantLeaf::Num(i)) => slot(&mut config.plant.num, i)?,
            ParamPath::Plant(PlantLeaf::Den(i)) => slot(&mut config.plant.den, i)?,
            ParamPath::Plant(PlantLeaf::X0(i)) => slot(&mut config.initial_plant_state, i)?,
            ParamPath::Loop(name, leaf) => {
                let l = config.loop_spec_mut(name);
                match leaf {
                    LoopLeaf::Kp => l.pid.kp = value,
                    LoopLeaf::Ki => l.pid.ki = value,
                    LoopLeaf::Kd => l.pid.kd = value,
                    LoopLeaf::N => l.pid.n = value,
                    LoopLeaf::Qw => l.noise.qw = value,
                    LoopLeaf::Rv => l.noise.rv = value,
                    LoopLeaf::H => l.noise.h = value,
                    LoopLeaf::G(i) => slot(&mut l.noise.g, i)?,
                }
            }
            ParamPath::Signal(which, leaf) => {
                let signal = match which {
                    SignalSlot::Target(name) => &mut config.loop_spec_mut(name).target,
                    SignalSlot::Apa(name) => &mut config.loop_spec_mut(name).apa,
                    SignalSlot::Disturbance => &mut config.disturbance,
                };
                match (signal, leaf) {
                    (SignalSpec::Constant(v), SignalLeaf::Amplitude) => *v = value,
                    (SignalSpec::Step { amplitude, .. }, SignalLeaf::Amplitude)
                    | (SignalSpec::Pulse { amplitude, .. }, SignalLeaf::Amplitude) => *amplitude = value,
                    (SignalSpec::Step { onset, .. }, SignalLeaf::Onset)
                    | (SignalSpec::Pulse { onset, .. }, SignalLeaf::Onset) => *onset = value,
                    (SignalSpec::Pulse { offset, .. }, SignalLeaf::Offset) => *offset = value,
                    (s, _) => {
                        return Err(not_applicable(format!("leaf does not exist on signal `{s}`")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("no sweep values given")]
    NoValues,
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("value {value}: {source}")]
    Invalid { value: f64, source: ConfigError },
    #[error("value {value}: {source}")]
    Simulation { value: f64, source: SimError },
    #[error("value {value}: {source}")]
    Metrics { value: f64, source: TraceError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: Metrics,
}

/// One independent simulation per value, rows in input order.
pub fn sweep(base: &SimConfig, path: &ParamPath, values: &[f64]) -> Result<Vec<SweepRow>, SweepError> {
    if values.is_empty() {
        return Err(SweepError::NoValues);
    }
    values
        .par_iter()
        .map(|&value| {
            let mut cfg = base.clone();
            path.apply(&mut cfg, value)?;
            cfg.validate()
                .map_err(|source| SweepError::Invalid { value, source })?;
            let trace = simulate(&cfg).map_err(|source| SweepError::Simulation { value, source })?;
            let metrics =
                compute_metrics(&trace, &cfg).map_err(|source| SweepError::Metrics { value, source })?;
            Ok(SweepRow { value, metrics })
        })
        .collect()
}
