//! Discrete-time simulation of a parallel posture and movement control model.
//!
//! Two hybrid loops share one linear plant. Each loop compares a planner
//! target with its observer's estimate, feeds the error through a PID
//! controller, and sends the command both to the plant and, as an efference
//! copy, to a fixed-gain Kalman predictor that also sees the measured plant
//! output.

pub mod config;
pub mod controllers;
pub mod engine;
pub mod estimator;
pub mod lti;
pub mod scenario;
pub mod signals;
pub mod sweep;

pub use config::{LoopName, LoopSpec, PidGains, PlantSpec, SimConfig};
pub use engine::{compute_metrics, run_paper_scenario, simulate, Metrics, PaperScenario, Trace, TraceRow};
pub use scenario::{parse_scenario, serialize_scenario};
pub use signals::SignalSpec;
pub use sweep::{sweep, ParamPath};
