//! Two control loops (posture, movement) around one shared plant.
//!
//! Each trace row `k` (time `k * ts`) is produced in this order:
//!
//! 1. targets, injections and the disturbance are evaluated on the grid;
//! 2. `error = target + injection - estimate`, where `estimate` is the value
//!    left by the previous row (zero at `k = 0`);
//! 3. at control instants each PID turns its error into a command;
//! 4. at control instants the plant receives the sum of both commands and
//!    emits `plant_raw` from its incoming state; the measured output is
//!    `y = plant_raw + disturbance`;
//! 5. at control instants each observer takes its own loop's command as
//!    efference copy and the shared `y` as measurement;
//! 6. the row is recorded.
//!
//! Between control instants commands, `plant_raw` and estimates are held.

use std::str::FromStr;

use thiserror::Error;

use crate::config::{ConfigError, LoopName, LoopSpec, SimConfig};
use crate::controllers::PidState;
use crate::estimator::KalmanState;
use crate::signals::{grid_index, SignalSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("non-finite value in `{signal}` at step {step}")]
    NonFinite { step: usize, signal: String },
}

/// Signals of one loop at one trace row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoopSample {
    pub target: f64,
    pub injection: f64,
    pub error: f64,
    pub command: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub posture: LoopSample,
    pub movement: LoopSample,
    pub disturbance: f64,
    /// Plant output before the disturbance is added.
    pub plant_raw: f64,
    /// Measured output shared by both observers.
    pub y: f64,
}

impl TraceRow {
    pub fn loop_sample(&self, name: LoopName) -> &LoopSample {
        match name {
            LoopName::Posture => &self.posture,
            LoopName::Movement => &self.movement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("time {0} s lies outside the trace")]
    OutOfRange(f64),
    #[error("window [{0}, {1}) is empty or outside the trace")]
    BadWindow(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub ts: f64,
    pub control_period: f64,
    /// Per loop (posture, movement): observer model differs from the plant.
    pub model_mismatch: [bool; 2],
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn index(&self, t: f64) -> Result<usize, TraceError> {
        let k = grid_index(t, self.ts);
        if k < 0 || k as usize >= self.rows.len() {
            return Err(TraceError::OutOfRange(t));
        }
        Ok(k as usize)
    }

    pub fn row_at(&self, t: f64) -> Result<&TraceRow, TraceError> {
        Ok(&self.rows[self.index(t)?])
    }

    /// Measured output at the grid sample nearest `t`.
    pub fn y_at(&self, t: f64) -> Result<f64, TraceError> {
        Ok(self.row_at(t)?.y)
    }

    /// Rows whose grid time falls in `[t0, t1)`.
    pub fn window(&self, t0: f64, t1: f64) -> Result<&[TraceRow], TraceError> {
        let k0 = grid_index(t0, self.ts);
        let k1 = grid_index(t1, self.ts);
        if k0 < 0 || k1 <= k0 || k1 as usize > self.rows.len() {
            return Err(TraceError::BadWindow(t0, t1));
        }
        Ok(&self.rows[k0 as usize..k1 as usize])
    }

    /// Mean of `y` over `[t0, t1)`.
    pub fn window_mean(&self, t0: f64, t1: f64) -> Result<f64, TraceError> {
        let rows = self.window(t0, t1)?;
        Ok(rows.iter().map(|r| r.y).sum::<f64>() / rows.len() as f64)
    }

    pub fn ys(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.y).collect()
    }
}

/// Runs the closed loop for the configured duration.
pub fn simulate(config: &SimConfig) -> Result<Trace, SimError> {
    let sim = config.compile()?;
    let [posture, movement] = &sim.loops;
    let loops = [posture, movement];

    let mut plant_state = sim.initial_state.clone();
    let mut pid = [PidState::default(); 2];
    let mut observers = loops.map(|l| KalmanState::zeros(l.kalman.model().order()));
    let mut estimate = [0.0f64; 2];
    let mut command = [0.0f64; 2];
    let mut plant_raw = 0.0;

    let mut rows = Vec::with_capacity(sim.steps);
    for k in 0..sim.steps {
        let ki = k as i64;
        let control = k % sim.control_stride == 0;
        let disturbance = sim.disturbance.eval(ki);

        let mut samples = [LoopSample::default(); 2];
        for (i, l) in loops.iter().enumerate() {
            let target = l.target.eval(ki);
            let injection = l.apa.eval(ki);
            samples[i] = LoopSample {
                target,
                injection,
                error: target + injection - estimate[i],
                ..LoopSample::default()
            };
        }

        if control {
            for (i, l) in loops.iter().enumerate() {
                let (next, u) = l.pid.step(pid[i], samples[i].error);
                pid[i] = next;
                command[i] = u;
            }
            let (next, raw) = sim
                .plant
                .step(&plant_state, command[0] + command[1])
                .expect("plant state sized from model");
            plant_state = next;
            plant_raw = raw;
        }
        let y = plant_raw + disturbance;

        if control {
            for (i, l) in loops.iter().enumerate() {
                let (next, est, _) = l.kalman.step(&observers[i], command[i], y);
                observers[i] = next;
                estimate[i] = est;
            }
        }

        for (i, s) in samples.iter_mut().enumerate() {
            s.command = command[i];
            s.estimate = estimate[i];
        }
        let row = TraceRow {
            t: k as f64 * sim.ts,
            posture: samples[0],
            movement: samples[1],
            disturbance,
            plant_raw,
            y,
        };
        check_finite(k, &row)?;
        rows.push(row);
    }

    Ok(Trace {
        ts: sim.ts,
        control_period: sim.control_period,
        model_mismatch: [posture.model_mismatch, movement.model_mismatch],
        rows,
    })
}

fn check_finite(step: usize, row: &TraceRow) -> Result<(), SimError> {
    let mut fields: Vec<(String, f64)> = vec![
        ("disturbance".into(), row.disturbance),
        ("plant_raw".into(), row.plant_raw),
        ("y".into(), row.y),
    ];
    for name in LoopName::ALL {
        let s = row.loop_sample(name);
        fields.extend([
            (format!("{name}_target"), s.target),
            (format!("{name}_apa"), s.injection),
            (format!("{name}_error"), s.error),
            (format!("{name}_cmd"), s.command),
            (format!("{name}_est"), s.estimate),
        ]);
    }
    match fields.into_iter().find(|(_, v)| !v.is_finite()) {
        Some((signal, _)) => Err(SimError::NonFinite { step, signal }),
        None => Ok(()),
    }
}

/// Band around the expected output within which a run counts as settled.
pub const SETTLE_TOLERANCE: f64 = 0.005;
/// Span at the end of the run (and of the movement window) used for
/// settling and plateau statistics, s.
pub const TAIL_SPAN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub final_y: f64,
    /// Sum of both targets and injections at the last sample.
    pub expected_final: f64,
    /// `|y - expected| < SETTLE_TOLERANCE` over the final `TAIL_SPAN`.
    pub settled: bool,
    /// Max `|y - posture target|` over the posture APA window; 0 without APA.
    pub max_apa_deviation: f64,
    /// Movement error at the first sample with a nonzero movement target.
    pub movement_error_at_onset: Option<f64>,
    /// Mean `y` over the last `TAIL_SPAN` of the movement target's window.
    pub movement_plateau_mean: Option<f64>,
}

impl Metrics {
    /// Flat `key=value` pairs in a fixed order. Absent values are omitted.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("final_y", self.final_y.to_string()),
            ("expected_final", self.expected_final.to_string()),
            ("settled", self.settled.to_string()),
            ("max_apa_deviation", self.max_apa_deviation.to_string()),
        ];
        if let Some(v) = self.movement_error_at_onset {
            out.push(("movement_error_at_onset", v.to_string()));
        }
        if let Some(v) = self.movement_plateau_mean {
            out.push(("movement_plateau_mean", v.to_string()));
        }
        out
    }
}

fn expected(row: &TraceRow) -> f64 {
    row.posture.target + row.posture.injection + row.movement.target + row.movement.injection
}

pub fn compute_metrics(trace: &Trace, config: &SimConfig) -> Result<Metrics, TraceError> {
    let last = trace.rows.last().ok_or(TraceError::Empty)?;
    let end = last.t + trace.ts;

    let tail_start = (end - TAIL_SPAN).max(0.0);
    let settled = trace
        .window(tail_start, end)?
        .iter()
        .all(|r| (r.y - expected(r)).abs() < SETTLE_TOLERANCE);

    let max_apa_deviation = match clip_window(config.posture.apa.active_window(), end) {
        Some((t0, t1)) => trace
            .window(t0, t1)?
            .iter()
            .map(|r| (r.y - r.posture.target).abs())
            .fold(0.0, f64::max),
        None => 0.0,
    };

    let movement_error_at_onset = trace
        .rows
        .iter()
        .find(|r| r.movement.target != 0.0)
        .map(|r| r.movement.error);

    let movement_plateau_mean = match clip_window(config.movement.target.active_window(), end) {
        Some((t0, t1)) => Some(trace.window_mean((t1 - TAIL_SPAN).max(t0), t1)?),
        None => None,
    };

    Ok(Metrics {
        final_y: last.y,
        expected_final: expected(last),
        settled,
        max_apa_deviation,
        movement_error_at_onset,
        movement_plateau_mean,
    })
}

fn clip_window(window: Option<(f64, f64)>, end: f64) -> Option<(f64, f64)> {
    let (t0, t1) = window?;
    let (t0, t1) = (t0.max(0.0), t1.min(end));
    (t0 < t1).then_some((t0, t1))
}

/// The four built-in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PaperScenario {
    /// Posture target only.
    Posture,
    /// Posture target with an external perturbation on the plant output.
    PostureExtPerturb,
    /// Posture and movement targets, no anticipatory adjustment.
    PmNoApa,
    /// Posture and movement targets with an inhibitory APA before movement.
    PmApa,
}

impl PaperScenario {
    pub const ALL: [PaperScenario; 4] = [
        PaperScenario::Posture,
        PaperScenario::PostureExtPerturb,
        PaperScenario::PmNoApa,
        PaperScenario::PmApa,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PaperScenario::Posture => "posture",
            PaperScenario::PostureExtPerturb => "posture_ext_perturb",
            PaperScenario::PmNoApa => "pm_no_apa",
            PaperScenario::PmApa => "pm_apa",
        }
    }

    pub fn config(self) -> SimConfig {
        let movement_pulse = SignalSpec::Pulse {
            onset: 5.0,
            offset: 7.0,
            amplitude: 5.0,
        };
        let mut cfg = SimConfig::default();
        match self {
            PaperScenario::Posture => {}
            PaperScenario::PostureExtPerturb => {
                // One control period long: the loop sees a single disturbed sample.
                cfg.disturbance = SignalSpec::Pulse {
                    onset: 5.0,
                    offset: 6.0,
                    amplitude: -5.0,
                };
            }
            PaperScenario::PmNoApa => {
                cfg.movement = LoopSpec::paper(movement_pulse);
            }
            PaperScenario::PmApa => {
                cfg.movement = LoopSpec::paper(movement_pulse);
                cfg.posture.apa = SignalSpec::Pulse {
                    onset: 3.0,
                    offset: 5.0,
                    amplitude: -0.5,
                };
            }
        }
        cfg
    }
}

impl FromStr for PaperScenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PaperScenario::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| {
                let ids: Vec<_> = PaperScenario::ALL.iter().map(|p| p.id()).collect();
                format!("unknown scenario `{s}` (expected one of {})", ids.join(", "))
            })
    }
}

pub fn run_paper_scenario(id: PaperScenario) -> (Trace, Metrics) {
    let cfg = id.config();
    let trace = simulate(&cfg).expect("built-in scenarios are valid and stable");
    let metrics = compute_metrics(&trace, &cfg).expect("built-in scenarios have complete traces");
    (trace, metrics)
}
