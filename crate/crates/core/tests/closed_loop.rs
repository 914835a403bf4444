use posture_sim::config::{LoopName, SimConfig};
use posture_sim::engine::{compute_metrics, simulate, PaperScenario};
use posture_sim::signals::SignalSpec;
use posture_sim::sweep::{sweep, ParamPath};
use posture_sim::{run_paper_scenario, Trace};
use proptest::prelude::*;

fn with_targets(posture: SignalSpec, movement: SignalSpec) -> SimConfig {
    let mut c = SimConfig::default();
    c.loop_spec_mut(LoopName::Posture).target = posture;
    c.loop_spec_mut(LoopName::Movement).target = movement;
    c
}

fn max_superposition_gap(both: &Trace, p: &Trace, m: &Trace) -> f64 {
    both.rows
        .iter()
        .zip(&p.rows)
        .zip(&m.rows)
        .map(|((b, p), m)| (b.y - p.y - m.y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn posture_settles_on_target() {
    let (trace, metrics) = run_paper_scenario(PaperScenario::Posture);
    assert_eq!(trace.len(), 1001);
    assert!((trace.y_at(10.0).unwrap() - 1.0).abs() < 0.005);
    assert!((metrics.final_y - 1.0).abs() < 0.005);
    assert!(metrics.settled);
    assert_eq!(metrics.expected_final, 1.0);
}

#[test]
fn external_perturbation_feeds_through_then_recovers() {
    let (trace, metrics) = run_paper_scenario(PaperScenario::PostureExtPerturb);
    let row = trace.row_at(5.0).unwrap();
    assert_eq!(trace.row_at(4.99).unwrap().disturbance, 0.0);
    assert_eq!(row.disturbance, -5.0);
    assert_eq!(row.y, row.plant_raw - 5.0);
    assert!(row.y <= -3.5);
    assert!(metrics.final_y >= 0.99 && metrics.final_y <= 1.005);
}

#[test]
fn apa_shifts_onset_error_below_five() {
    let (_, no_apa) = run_paper_scenario(PaperScenario::PmNoApa);
    let (_, apa) = run_paper_scenario(PaperScenario::PmApa);
    let e0 = no_apa.movement_error_at_onset.unwrap();
    let e1 = apa.movement_error_at_onset.unwrap();
    assert!(e1 < e0);
    assert!(e1 > 4.9 && e1 < 5.0);
    assert!(apa.max_apa_deviation > 0.01);
    assert_eq!(no_apa.max_apa_deviation, 0.0);
}

#[test]
fn superposition_of_targets() {
    let p = simulate(&with_targets(SignalSpec::step(0.0, 1.0).unwrap(), SignalSpec::zero())).unwrap();
    let m = simulate(&with_targets(SignalSpec::zero(), SignalSpec::pulse(5.0, 7.0, 5.0).unwrap())).unwrap();
    let both = simulate(&with_targets(
        SignalSpec::step(0.0, 1.0).unwrap(),
        SignalSpec::pulse(5.0, 7.0, 5.0).unwrap(),
    ))
    .unwrap();
    assert!(max_superposition_gap(&both, &p, &m) < 1e-9);
}

#[test]
fn zero_scenario_is_exactly_zero() {
    let c = with_targets(SignalSpec::zero(), SignalSpec::zero());
    let trace = simulate(&c).unwrap();
    assert!(trace.rows.iter().all(|r| r.y == 0.0 && r.posture.command == 0.0 && r.movement.estimate == 0.0));
    let m = compute_metrics(&trace, &c).unwrap();
    assert_eq!((m.final_y, m.expected_final, m.settled), (0.0, 0.0, true));
}

#[test]
fn repeated_runs_are_bit_identical() {
    for id in PaperScenario::ALL {
        let a = simulate(&id.config()).unwrap();
        let b = simulate(&id.config()).unwrap();
        assert_eq!(a, b, "{}", id.id());
    }
}

#[test]
fn singleton_sweep_equals_direct_run() {
    let base = PaperScenario::Posture.config();
    let rows = sweep(&base, &"posture.kp".parse().unwrap(), &[0.5]).unwrap();
    let direct = compute_metrics(&simulate(&base).unwrap(), &base).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].metrics, direct);
}

#[test]
fn movement_amplitude_sweep_adds_movement_contribution() {
    let base = PaperScenario::PmNoApa.config();
    let path: ParamPath = "movement.target.amplitude".parse().unwrap();
    let rows = sweep(&base, &path, &[0.0, 5.0]).unwrap();
    let rest = rows[0].metrics.movement_plateau_mean.unwrap();
    assert!((rest - 1.0).abs() < 0.01);

    let mut posture_only = base.clone();
    path.apply(&mut posture_only, 0.0).unwrap();
    let p = simulate(&posture_only).unwrap();
    let movement_only = with_targets(SignalSpec::zero(), SignalSpec::pulse(5.0, 7.0, 5.0).unwrap());
    let m = simulate(&movement_only).unwrap();
    let plateau_sum = p.window_mean(6.5, 7.0).unwrap() + m.window_mean(6.5, 7.0).unwrap();
    assert!((p.window_mean(6.5, 7.0).unwrap() - 1.0).abs() < 0.01);
    let plateau = rows[1].metrics.movement_plateau_mean.unwrap();
    assert!((plateau - plateau_sum).abs() < 1e-9);
    assert!(plateau > 1.0);
}

#[test]
fn step_size_sweep_keeps_posture_on_target() {
    let base = PaperScenario::Posture.config();
    let rows = sweep(&base, &"simulation.ts".parse().unwrap(), &[0.01, 0.005]).unwrap();
    for r in rows {
        assert!((r.metrics.final_y - 1.0).abs() < 0.005, "ts={} final_y={}", r.value, r.metrics.final_y);
    }
}

#[test]
fn estimate_tracks_plant_in_posture_run() {
    let (trace, _) = run_paper_scenario(PaperScenario::Posture);
    let last = trace.row_at(10.0).unwrap();
    // the observer settles to within a fraction of a percent of the plant
    assert!((last.posture.estimate - last.plant_raw).abs() < 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_loop_is_linear_in_targets(a in -3.0..3.0f64, b in -3.0..3.0f64, on in 0u32..9, width in 1u32..5) {
        let on = f64::from(on);
        let off = (on + f64::from(width)).min(10.0);
        let ps = SignalSpec::step(0.0, a).unwrap();
        let ms = SignalSpec::pulse(on, off, b).unwrap();
        let p = simulate(&with_targets(ps.clone(), SignalSpec::zero())).unwrap();
        let m = simulate(&with_targets(SignalSpec::zero(), ms.clone())).unwrap();
        let both = simulate(&with_targets(ps, ms)).unwrap();
        prop_assert!(max_superposition_gap(&both, &p, &m) < 1e-9);
    }
}
