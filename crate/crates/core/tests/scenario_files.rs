use posture_sim::config::{LoopName, SimConfig};
use posture_sim::engine::PaperScenario;
use posture_sim::scenario::{parse_scenario, parse_scenario_with_warnings, serialize_scenario};
use posture_sim::signals::SignalSpec;
use proptest::prelude::*;

#[test]
fn empty_document_is_posture_scenario() {
    let c = parse_scenario("").unwrap();
    assert_eq!(c, PaperScenario::Posture.config());
    assert_eq!(c.loop_spec(LoopName::Movement).target, SignalSpec::zero());
}

#[test]
fn apa_document_is_pm_apa() {
    let text = "[posture]\napa = pulse 3 5 -0.5\n[movement]\ntarget = pulse 5 7 5\n";
    assert_eq!(parse_scenario(text).unwrap(), PaperScenario::PmApa.config());
}

#[test]
fn shipped_scenario_files_match_builtins() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
    for id in PaperScenario::ALL {
        let text = std::fs::read_to_string(format!("{dir}/{}.scn", id.id())).unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), id.config(), "{}", id.id());
    }
}

#[test]
fn canonical_form_is_a_fixed_point() {
    for id in PaperScenario::ALL {
        let once = serialize_scenario(&id.config());
        let back = parse_scenario(&once).unwrap();
        assert_eq!(back, id.config());
        assert_eq!(back.ts.to_bits(), 0.01f64.to_bits());
        assert_eq!(serialize_scenario(&back), once);
    }
}

#[test]
fn degenerate_denominator_is_rejected() {
    let err = parse_scenario("[plant]\nden = 1\n").unwrap_err();
    assert_eq!(err.line, Some(2));
}

#[test]
fn unknown_key_is_located() {
    let err = parse_scenario("[posture]\nkp = 0.5\nkq = 1\n").unwrap_err();
    assert_eq!(err.line, Some(3));
    assert!(err.to_string().contains("kq"));
}

fn arb_config() -> impl Strategy<Value = SimConfig> {
    (
        0.1..2.0f64,
        0.0..3.0f64,
        -2.0..2.0f64,
        0.0..0.5f64,
        0.01..3.0f64,
        0u32..8,
        -5.0..5.0f64,
    )
        .prop_map(|(kp, ki, amp, g, rv, onset, dist)| {
            let mut c = SimConfig::default();
            let p = c.loop_spec_mut(LoopName::Posture);
            p.pid.kp = kp;
            p.pid.ki = ki;
            p.noise.g = vec![g];
            p.noise.rv = rv;
            let m = c.loop_spec_mut(LoopName::Movement);
            m.target = SignalSpec::pulse(f64::from(onset), f64::from(onset) + 1.5, amp).unwrap();
            c.disturbance = SignalSpec::step(f64::from(onset) + 0.25, dist).unwrap();
            c
        })
}

proptest! {
    #[test]
    fn parser_is_total(text in "\\PC{0,200}") {
        let _ = parse_scenario(&text);
    }

    #[test]
    fn parser_is_total_on_scenario_like_text(
        lines in prop::collection::vec(
            prop_oneof![
                Just("[simulation]".to_string()),
                Just("[posture]".to_string()),
                Just("[movement]".to_string()),
                Just("[plant]".to_string()),
                Just("[disturbance]".to_string()),
                "[a-z_]{1,10} = [-0-9. a-z;()]{0,20}",
                "ts = -?[0-9]{0,3}(\\.[0-9]{0,3})?",
                "target = (step|pulse|constant|sum) [-0-9. ]{0,15}",
                "# [ -~]{0,20}",
            ],
            0..20,
        )
    ) {
        let text = lines.join("\n");
        if let Ok((c, _)) = parse_scenario_with_warnings(&text) {
            prop_assert!(c.validate().is_ok());
        }
    }

    #[test]
    fn roundtrip_is_identity(c in arb_config()) {
        let text = serialize_scenario(&c);
        let back = parse_scenario(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(serialize_scenario(&back), text);
    }
}
