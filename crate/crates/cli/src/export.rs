//! Text renderings of traces, metrics and sweep tables.
//!
//! Numbers use Rust's shortest round-trip formatting, `.` as decimal
//! separator and `\n` line endings, so reading a file back reproduces the
//! in-memory values bit for bit.

use std::fmt::Write as _;

use posture_sim::engine::{Metrics, Trace};
use posture_sim::sweep::SweepRow;

pub const TRACE_HEADER: &str = "t,posture_target,posture_apa,posture_error,posture_cmd,posture_est,\
movement_target,movement_apa,movement_error,movement_cmd,movement_est,disturbance,plant_raw,y";

pub const SWEEP_HEADER: &str =
    "value,final_y,expected_final,settled,max_apa_deviation,movement_error_at_onset,movement_plateau_mean";

pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(trace.len() * 160);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rows {
        let p = &r.posture;
        let m = &r.movement;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            p.target,
            p.injection,
            p.error,
            p.command,
            p.estimate,
            m.target,
            m.injection,
            m.error,
            m.command,
            m.estimate,
            r.disturbance,
            r.plant_raw,
            r.y
        );
    }
    out
}

pub fn metrics_text(metrics: &Metrics) -> String {
    metrics
        .entries()
        .into_iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let m = &row.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.value,
            m.final_y,
            m.expected_final,
            m.settled,
            m.max_apa_deviation,
            opt(m.movement_error_at_onset),
            opt(m.movement_plateau_mean)
        );
    }
    out
}
