//! Line-oriented scenario files.
//!
//! ```text
//! # posture and movement with an anticipatory adjustment
//! [posture]
//! apa = pulse 3 5 -0.5
//!
//! [movement]
//! target = pulse 5 7 5
//! ```
//!
//! Sections: `[simulation]` (`ts`, `duration`, `control_period`), `[plant]`
//! (`num`, `den`, `x0`), `[posture]` and `[movement]` (`target`, `apa`, `kp`,
//! `ki`, `kd`, `n`, `qw`, `rv`, `g`, `h`, `model_num`, `model_den`) and
//! `[disturbance]` (`signal`). Numeric lists are space separated, signals use
//! the textual form of [`SignalSpec`]. `#` starts a comment. Every omitted
//! key keeps the value of [`SimConfig::default`].

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::config::{ConfigError, LoopName, PlantSpec, SimConfig, SnapWarning};
use crate::signals::{parse_number, SignalSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ScenarioError {
    /// 1-based line number, when the problem can be tied to a line.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl ScenarioError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Section {
    Simulation,
    Plant,
    Loop(LoopName),
    Disturbance,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "simulation" => Section::Simulation,
            "plant" => Section::Plant,
            "posture" => Section::Loop(LoopName::Posture),
            "movement" => Section::Loop(LoopName::Movement),
            "disturbance" => Section::Disturbance,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Section::Simulation => "simulation",
            Section::Plant => "plant",
            Section::Loop(l) => l.as_str(),
            Section::Disturbance => "disturbance",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Simulation => &["ts", "duration", "control_period"],
            Section::Plant => &["num", "den", "x0"],
            Section::Loop(_) => &[
                "target",
                "apa",
                "kp",
                "ki",
                "kd",
                "n",
                "qw",
                "rv",
                "g",
                "h",
                "model_num",
                "model_den",
            ],
            Section::Disturbance => &["signal"],
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<SimConfig, ScenarioError> {
    parse_scenario_with_warnings(text).map(|(cfg, _)| cfg)
}

/// Like [`parse_scenario`], also reporting event times that were moved onto
/// the sample grid.
pub fn parse_scenario_with_warnings(text: &str) -> Result<(SimConfig, Vec<SnapWarning>), ScenarioError> {
    let mut cfg = SimConfig::default();
    let mut section: Option<Section> = None;
    let mut seen_sections: HashMap<Section, usize> = HashMap::new();
    // Dotted field -> line, used to position validation errors.
    let mut lines: HashMap<String, usize> = HashMap::new();
    let mut internal_models: HashMap<LoopName, (Option<Vec<f64>>, Option<Vec<f64>>)> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }

        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ScenarioError::at(lineno, format!("malformed section header `{line}`")))?
                .trim();
            let sec = Section::parse(name)
                .ok_or_else(|| ScenarioError::at(lineno, format!("unknown section `[{name}]`")))?;
            if let Some(first) = seen_sections.insert(sec, lineno) {
                return Err(ScenarioError::at(
                    lineno,
                    format!("duplicate section `[{name}]` (first on line {first})"),
                ));
            }
            section = Some(sec);
            continue;
        }

        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ScenarioError::at(lineno, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| ScenarioError::at(lineno, format!("key `{key}` appears before any section")))?;
        if !sec.keys().contains(&key) {
            return Err(ScenarioError::at(
                lineno,
                format!("unknown key `{key}` in section `[{}]`", sec.name()),
            ));
        }
        let field = format!("{}.{key}", sec.name());
        if let Some(first) = lines.insert(field.clone(), lineno) {
            return Err(ScenarioError::at(
                lineno,
                format!("duplicate key `{key}` (first on line {first})"),
            ));
        }
        if value.is_empty() {
            return Err(ScenarioError::at(lineno, format!("key `{key}` has no value")));
        }

        let number = || parse_number(value).map_err(|m| ScenarioError::at(lineno, m));
        let list = || {
            value
                .split_whitespace()
                .map(|w| parse_number(w).map_err(|m| ScenarioError::at(lineno, m)))
                .collect::<Result<Vec<f64>, _>>()
        };
        let signal = || {
            value
                .parse::<SignalSpec>()
                .map_err(|e| ScenarioError::at(lineno, format!("`{key}`: {e}")))
        };

        match sec {
            Section::Simulation => match key {
                "ts" => cfg.ts = number()?,
                "duration" => cfg.duration = number()?,
                _ => cfg.control_period = number()?,
            },
            Section::Plant => match key {
                "num" => cfg.plant.num = list()?,
                "den" => cfg.plant.den = list()?,
                _ => cfg.initial_plant_state = list()?,
            },
            Section::Disturbance => cfg.disturbance = signal()?,
            Section::Loop(name) => {
                let l = cfg.loop_spec_mut(name);
                match key {
                    "target" => l.target = signal()?,
                    "apa" => l.apa = signal()?,
                    "kp" => l.pid.kp = number()?,
                    "ki" => l.pid.ki = number()?,
                    "kd" => l.pid.kd = number()?,
                    "n" => l.pid.n = number()?,
                    "qw" => l.noise.qw = number()?,
                    "rv" => l.noise.rv = number()?,
                    "g" => l.noise.g = list()?,
                    "h" => l.noise.h = number()?,
                    "model_num" => internal_models.entry(name).or_default().0 = Some(list()?),
                    _ => internal_models.entry(name).or_default().1 = Some(list()?),
                }
            }
        }
    }

    for (name, (num, den)) in internal_models {
        let fallback = PlantSpec::paper();
        cfg.loop_spec_mut(name).internal_model = Some(PlantSpec {
            num: num.unwrap_or(fallback.num),
            den: den.unwrap_or(fallback.den),
        });
    }

    let warnings = cfg.snap_to_grid();
    cfg.validate().map_err(|e| locate(e, &lines))?;
    Ok((cfg, warnings))
}

/// Attaches the line of the offending key to a validation error.
fn locate(err: ConfigError, lines: &HashMap<String, usize>) -> ScenarioError {
    let candidates: Vec<String> = match err.field.as_str() {
        "plant.den" => vec!["plant.den".into(), "plant.num".into()],
        f if f.ends_with(".pid") => {
            let sec = f.trim_end_matches(".pid");
            ["ts", "kp", "ki", "kd", "n"]
                .iter()
                .map(|k| format!("{sec}.{k}"))
                .collect()
        }
        f if f.ends_with(".noise") => {
            let sec = f.trim_end_matches(".noise");
            ["rv", "qw", "g", "h"].iter().map(|k| format!("{sec}.{k}")).collect()
        }
        f if f.ends_with(".model.den") => {
            let sec = f.trim_end_matches(".model.den");
            vec![format!("{sec}.model_den"), format!("{sec}.model_num")]
        }
        f => vec![f.to_string()],
    };
    let line = candidates.iter().find_map(|c| lines.get(c).copied());
    ScenarioError {
        line,
        message: err.to_string(),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

/// Canonical text for `config`: every key, fixed order, shortest
/// round-trip number formatting.
pub fn serialize_scenario(config: &SimConfig) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "[simulation]");
    let _ = writeln!(w, "ts = {}", config.ts);
    let _ = writeln!(w, "duration = {}", config.duration);
    let _ = writeln!(w, "control_period = {}", config.control_period);
    let _ = writeln!(w);
    let _ = writeln!(w, "[plant]");
    let _ = writeln!(w, "num = {}", join(&config.plant.num));
    let _ = writeln!(w, "den = {}", join(&config.plant.den));
    let _ = writeln!(w, "x0 = {}", join(&config.initial_plant_state));
    for name in LoopName::ALL {
        let l = config.loop_spec(name);
        let _ = writeln!(w);
        let _ = writeln!(w, "[{name}]");
        let _ = writeln!(w, "target = {}", l.target);
        let _ = writeln!(w, "apa = {}", l.apa);
        let _ = writeln!(w, "kp = {}", l.pid.kp);
        let _ = writeln!(w, "ki = {}", l.pid.ki);
        let _ = writeln!(w, "kd = {}", l.pid.kd);
        let _ = writeln!(w, "n = {}", l.pid.n);
        let _ = writeln!(w, "qw = {}", l.noise.qw);
        let _ = writeln!(w, "rv = {}", l.noise.rv);
        let _ = writeln!(w, "g = {}", join(&l.noise.g));
        let _ = writeln!(w, "h = {}", l.noise.h);
        if let Some(m) = &l.internal_model {
            let _ = writeln!(w, "model_num = {}", join(&m.num));
            let _ = writeln!(w, "model_den = {}", join(&m.den));
        }
    }
    let _ = writeln!(w);
    let _ = writeln!(w, "[disturbance]");
    let _ = writeln!(w, "signal = {}", config.disturbance);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PaperScenario;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(parse_scenario("").unwrap(), SimConfig::default());
        assert_eq!(parse_scenario("\n# nothing\n\n").unwrap(), PaperScenario::Posture.config());
    }

    #[test]
    fn apa_document() {
        let text = "[posture]\napa = pulse 3 5 -0.5\n[movement]\ntarget = pulse 5 7 5\n";
        assert_eq!(parse_scenario(text).unwrap(), PaperScenario::PmApa.config());
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "  [ movement ]  # trailing\n\ttarget =  pulse 5 7 5   # five\n\n[posture]\napa=pulse 3 5 -0.5";
        assert_eq!(parse_scenario(text).unwrap(), PaperScenario::PmApa.config());
    }

    #[test]
    fn degenerate_denominator() {
        let err = parse_scenario("[plant]\nden = 1\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("plant.den"), "{err}");
    }

    #[test]
    fn denominator_shorter_than_numerator() {
        let err = parse_scenario("[plant]\nnum = 1 2 3\nden = 1 0.5\n").unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse_scenario("[posture]\nkp = 0.5\nkq = 1\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().contains("kq"));
        assert!(err.to_string().starts_with("line 3:"));
    }

    #[test]
    fn structural_errors() {
        let cases: &[(&str, usize)] = &[
            ("[arm]\n", 1),
            ("[posture\n", 1),
            ("kp = 1\n", 1),
            ("[posture]\nkp 1\n", 2),
            ("[posture]\nkp = 1\nkp = 2\n", 3),
            ("[posture]\n[posture]\n", 2),
            ("[posture]\nkp = abc\n", 2),
            ("[posture]\nkp = \n", 2),
            ("[posture]\ntarget = pulse 5 3 1\n", 2),
            ("[plant]\nnum = 1 x\n", 2),
            ("[simulation]\nts = nan\n", 2),
            ("[disturbance]\nsignal = ramp 1\n", 2),
        ];
        for (text, line) in cases {
            let err = parse_scenario(text).unwrap_err();
            assert_eq!(err.line, Some(*line), "{text:?}: {err}");
        }
    }

    #[test]
    fn validation_errors_are_positioned() {
        let err = parse_scenario("[simulation]\nts = 0.01\ncontrol_period = 0.015\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        let err = parse_scenario("[movement]\nrv = 0\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse_scenario("[posture]\nkd = 1\nn = 0\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn roundtrip_builtin_scenarios() {
        for id in PaperScenario::ALL {
            let cfg = id.config();
            let text = serialize_scenario(&cfg);
            assert_eq!(parse_scenario(&text).unwrap(), cfg, "{}", id.id());
            assert_eq!(serialize_scenario(&parse_scenario(&text).unwrap()), text);
        }
    }

    #[test]
    fn roundtrip_preserves_ts_bits() {
        let cfg = PaperScenario::PmApa.config();
        let back = parse_scenario(&serialize_scenario(&cfg)).unwrap();
        assert_eq!(back.ts.to_bits(), 0.01f64.to_bits());
    }

    #[test]
    fn internal_model_keys() {
        let text = "[movement]\nmodel_den = 1 0.4\n";
        let cfg = parse_scenario(text).unwrap();
        assert_eq!(
            cfg.movement.internal_model,
            Some(PlantSpec {
                num: vec![1.0],
                den: vec![1.0, 0.4]
            })
        );
        assert_eq!(parse_scenario(&serialize_scenario(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn off_grid_times_warn() {
        let (cfg, warnings) = parse_scenario_with_warnings("[movement]\ntarget = pulse 5.004 7 5\n").unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(cfg.movement.target, SignalSpec::pulse(5.0, 7.0, 5.0).unwrap());
    }
}
