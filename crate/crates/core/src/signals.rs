//! Declarative time-domain signals used for planner targets, anticipatory
//! injections and external disturbances.
//!
//! A [`SignalSpec`] is an immutable description of a piecewise-constant
//! function of time. It can be evaluated at an arbitrary instant with
//! [`SignalSpec::eval`], or compiled onto a fixed sample grid with
//! [`SignalSpec::on_grid`], in which case every event time is converted to an
//! integer sample index and evaluation compares indices only.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("pulse onset {onset} must be strictly before its offset {offset}")]
    MalformedPulse { onset: f64, offset: f64 },
    #[error("signal parameter is not a finite number: {0}")]
    NonFinite(f64),
    #[error("sample time must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("cannot parse signal: {0}")]
    Syntax(String),
}

/// A declarative piecewise-constant signal.
///
/// Build pulses through [`SignalSpec::pulse`] (or validate hand-built values
/// with [`SignalSpec::validate`]) so that `onset < offset` always holds.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalSpec {
    Constant(f64),
    /// `amplitude` for `t >= onset`, zero before.
    Step { onset: f64, amplitude: f64 },
    /// `amplitude` on the half-open window `[onset, offset)`, zero elsewhere.
    Pulse { onset: f64, offset: f64, amplitude: f64 },
    Sum(Vec<SignalSpec>),
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec::Constant(0.0)
    }
}

impl SignalSpec {
    pub fn zero() -> Self {
        SignalSpec::Constant(0.0)
    }

    pub fn constant(value: f64) -> Result<Self, SignalError> {
        let s = SignalSpec::Constant(value);
        s.validate()?;
        Ok(s)
    }

    pub fn step(onset: f64, amplitude: f64) -> Result<Self, SignalError> {
        let s = SignalSpec::Step { onset, amplitude };
        s.validate()?;
        Ok(s)
    }

    pub fn pulse(onset: f64, offset: f64, amplitude: f64) -> Result<Self, SignalError> {
        let s = SignalSpec::Pulse {
            onset,
            offset,
            amplitude,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn sum(parts: Vec<SignalSpec>) -> Result<Self, SignalError> {
        let s = SignalSpec::Sum(parts);
        s.validate()?;
        Ok(s)
    }

    /// Checks finiteness of every parameter and the pulse ordering.
    pub fn validate(&self) -> Result<(), SignalError> {
        let finite = |v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(SignalError::NonFinite(v))
            }
        };
        match self {
            SignalSpec::Constant(v) => finite(*v),
            SignalSpec::Step { onset, amplitude } => {
                finite(*onset)?;
                finite(*amplitude)
            }
            SignalSpec::Pulse {
                onset,
                offset,
                amplitude,
            } => {
                finite(*onset)?;
                finite(*offset)?;
                finite(*amplitude)?;
                if onset < offset {
                    Ok(())
                } else {
                    Err(SignalError::MalformedPulse {
                        onset: *onset,
                        offset: *offset,
                    })
                }
            }
            SignalSpec::Sum(parts) => parts.iter().try_for_each(SignalSpec::validate),
        }
    }

    /// Value of the signal at time `t` (seconds).
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SignalSpec::Constant(v) => *v,
            SignalSpec::Step { onset, amplitude } => {
                if t >= *onset {
                    *amplitude
                } else {
                    0.0
                }
            }
            SignalSpec::Pulse {
                onset,
                offset,
                amplitude,
            } => {
                if t >= *onset && t < *offset {
                    *amplitude
                } else {
                    0.0
                }
            }
            SignalSpec::Sum(parts) => parts.iter().map(|p| p.eval(t)).sum(),
        }
    }

    /// Samples the signal at `t = k * ts` for `k = 0..=floor(duration / ts)`.
    ///
    /// Event times are snapped to the nearest grid index first, so the result
    /// never depends on floating-point comparisons of accumulated times.
    pub fn sample(&self, ts: f64, duration: f64) -> Result<Vec<f64>, SignalError> {
        if !(ts > 0.0) || !ts.is_finite() {
            return Err(SignalError::NonPositiveStep(ts));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(SignalError::NonPositiveDuration(duration));
        }
        self.validate()?;
        let grid = self.on_grid(ts);
        Ok((0..grid_len(ts, duration)).map(|k| grid.eval(k as i64)).collect())
    }

    /// Compiles the signal onto the sample grid `t = k * ts`.
    pub fn on_grid(&self, ts: f64) -> GridSignal {
        let idx = |t: f64| grid_index(t, ts);
        match self {
            SignalSpec::Constant(v) => GridSignal::Constant(*v),
            SignalSpec::Step { onset, amplitude } => GridSignal::Step {
                onset: idx(*onset),
                amplitude: *amplitude,
            },
            SignalSpec::Pulse {
                onset,
                offset,
                amplitude,
            } => GridSignal::Pulse {
                onset: idx(*onset),
                offset: idx(*offset),
                amplitude: *amplitude,
            },
            SignalSpec::Sum(parts) => {
                GridSignal::Sum(parts.iter().map(|p| p.on_grid(ts)).collect())
            }
        }
    }

    /// Time interval `[start, end)` over which the signal's shape is active,
    /// independent of amplitude. `None` for constants and empty sums.
    pub fn active_window(&self) -> Option<(f64, f64)> {
        match self {
            SignalSpec::Constant(_) => None,
            SignalSpec::Step { onset, .. } => Some((*onset, f64::INFINITY)),
            SignalSpec::Pulse { onset, offset, .. } => Some((*onset, *offset)),
            SignalSpec::Sum(parts) => parts
                .iter()
                .filter_map(SignalSpec::active_window)
                .reduce(|(a0, a1), (b0, b1)| (a0.min(b0), a1.max(b1))),
        }
    }

    /// Applies `f` to every event time in the signal.
    pub fn map_times(&self, f: &mut impl FnMut(f64) -> f64) -> SignalSpec {
        match self {
            SignalSpec::Constant(v) => SignalSpec::Constant(*v),
            SignalSpec::Step { onset, amplitude } => SignalSpec::Step {
                onset: f(*onset),
                amplitude: *amplitude,
            },
            SignalSpec::Pulse {
                onset,
                offset,
                amplitude,
            } => SignalSpec::Pulse {
                onset: f(*onset),
                offset: f(*offset),
                amplitude: *amplitude,
            },
            SignalSpec::Sum(parts) => SignalSpec::Sum(parts.iter().map(|p| p.map_times(f)).collect()),
        }
    }
}

/// Number of samples `floor(duration / ts) + 1` on the grid.
pub fn grid_len(ts: f64, duration: f64) -> usize {
    // Quotients such as 10 / 0.01 can land a hair under the integer.
    let q = duration / ts;
    let r = q.round();
    let steps = if (q - r).abs() <= 1e-9 * r.max(1.0) { r } else { q.floor() };
    steps as usize + 1
}

/// Nearest grid index for time `t`.
pub fn grid_index(t: f64, ts: f64) -> i64 {
    (t / ts).round() as i64
}

/// A signal whose event times are integer sample indices.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSignal {
    Constant(f64),
    Step { onset: i64, amplitude: f64 },
    Pulse { onset: i64, offset: i64, amplitude: f64 },
    Sum(Vec<GridSignal>),
}

impl GridSignal {
    pub fn eval(&self, k: i64) -> f64 {
        match self {
            GridSignal::Constant(v) => *v,
            GridSignal::Step { onset, amplitude } => {
                if k >= *onset {
                    *amplitude
                } else {
                    0.0
                }
            }
            GridSignal::Pulse {
                onset,
                offset,
                amplitude,
            } => {
                if k >= *onset && k < *offset {
                    *amplitude
                } else {
                    0.0
                }
            }
            GridSignal::Sum(parts) => parts.iter().map(|p| p.eval(k)).sum(),
        }
    }
}

impl fmt::Display for SignalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalSpec::Constant(v) => write!(f, "constant {v}"),
            SignalSpec::Step { onset, amplitude } => write!(f, "step {onset} {amplitude}"),
            SignalSpec::Pulse {
                onset,
                offset,
                amplitude,
            } => write!(f, "pulse {onset} {offset} {amplitude}"),
            SignalSpec::Sum(parts) => {
                f.write_str("sum(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for SignalSpec {
    type Err = SignalError;

    /// Parses `constant V`, `step T0 V`, `pulse T0 T1 V` or `sum(a; b; ...)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("sum") {
            let rest = rest.trim_start();
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| SignalError::Syntax(format!("expected `sum( ... )`, got `{s}`")))?;
            let parts = split_top_level(inner)?
                .into_iter()
                .map(str::parse)
                .collect::<Result<Vec<_>, _>>()?;
            return SignalSpec::sum(parts);
        }

        let mut words = s.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| SignalError::Syntax("empty signal".into()))?;
        let args = words
            .map(|w| parse_number(w).map_err(SignalError::Syntax))
            .collect::<Result<Vec<f64>, _>>()?;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(SignalError::Syntax(format!(
                    "`{kind}` takes {n} number(s), got {}",
                    args.len()
                )))
            }
        };
        match kind {
            "constant" => {
                arity(1)?;
                SignalSpec::constant(args[0])
            }
            "step" => {
                arity(2)?;
                SignalSpec::step(args[0], args[1])
            }
            "pulse" => {
                arity(3)?;
                SignalSpec::pulse(args[0], args[1], args[2])
            }
            other => Err(SignalError::Syntax(format!("unknown signal kind `{other}`"))),
        }
    }
}

/// Splits on `;` at parenthesis depth zero. An all-blank body is an empty sum.
fn split_top_level(body: &str) -> Result<Vec<&str>, SignalError> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in body.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| SignalError::Syntax("unbalanced `)`".into()))?
            }
            ';' if depth == 0 => {
                parts.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(SignalError::Syntax("unbalanced `(`".into()));
    }
    parts.push(&body[start..]);
    Ok(parts)
}

/// Parses a finite decimal number; `inf` and `NaN` spellings are rejected.
pub fn parse_number(word: &str) -> Result<f64, String> {
    match word.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("malformed number `{word}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn step_is_active_from_onset() {
        let s = SignalSpec::step(0.0, 1.0).unwrap();
        assert_eq!(s.eval(0.0), 1.0);
        assert_eq!(SignalSpec::step(5.0, -5.0).unwrap().eval(4.99), 0.0);
    }

    #[test]
    fn pulse_window_is_half_open() {
        let s = SignalSpec::pulse(5.0, 7.0, 5.0).unwrap();
        assert_eq!(s.eval(6.0), 5.0);
        assert_eq!(s.eval(7.0), 0.0);
        assert_eq!(s.eval(5.0), 5.0);
        let apa = SignalSpec::pulse(3.0, 5.0, -0.5).unwrap();
        assert_eq!(apa.eval(4.0), -0.5);
    }

    #[test]
    fn empty_sum_is_zero() {
        let s = SignalSpec::sum(vec![]).unwrap();
        for t in [0.0, 1.0, 1e6] {
            assert_eq!(s.eval(t), 0.0);
        }
    }

    #[test]
    fn malformed_pulse_rejected_at_construction() {
        assert_eq!(
            SignalSpec::pulse(7.0, 5.0, 1.0),
            Err(SignalError::MalformedPulse {
                onset: 7.0,
                offset: 5.0
            })
        );
        assert!(SignalSpec::pulse(5.0, 5.0, 1.0).is_err());
        assert!(SignalSpec::sum(vec![SignalSpec::Pulse {
            onset: 2.0,
            offset: 1.0,
            amplitude: 1.0
        }])
        .is_err());
    }

    #[test]
    fn sample_constant() {
        let s = SignalSpec::constant(1.0).unwrap();
        assert_eq!(s.sample(1.0, 3.0).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn sample_step_disturbance() {
        let s = SignalSpec::step(5.0, -5.0).unwrap();
        let v = s.sample(1.0, 10.0).unwrap();
        assert_eq!(v.len(), 11);
        assert!(v[..5].iter().all(|&x| x == 0.0));
        assert!(v[5..].iter().all(|&x| x == -5.0));
    }

    #[test]
    fn sample_pulse_on_half_second_grid() {
        // Window membership enumerated by hand: t = 5.0, 5.5, 6.0, 6.5 -> k = 10..=13.
        let s = SignalSpec::pulse(5.0, 7.0, 5.0).unwrap();
        let v = s.sample(0.5, 10.0).unwrap();
        assert_eq!(v.len(), 21);
        let active: Vec<usize> = (0..v.len()).filter(|&k| v[k] != 0.0).collect();
        assert_eq!(active, vec![10, 11, 12, 13]);
    }

    #[test]
    fn sample_rejects_bad_grid() {
        let s = SignalSpec::zero();
        assert_eq!(s.sample(0.0, 1.0), Err(SignalError::NonPositiveStep(0.0)));
        assert_eq!(s.sample(-1.0, 1.0), Err(SignalError::NonPositiveStep(-1.0)));
        assert_eq!(s.sample(0.1, 0.0), Err(SignalError::NonPositiveDuration(0.0)));
    }

    #[test]
    fn fine_grid_counts_are_exact() {
        assert_eq!(grid_len(0.01, 10.0), 1001);
        assert_eq!(grid_len(0.005, 10.0), 2001);
        assert_eq!(grid_len(0.3, 1.0), 4);
        // 0.07 / 0.01 is 7.000000000000001 in binary floating point.
        assert_eq!(grid_index(0.07, 0.01), 7);
    }

    #[test]
    fn parse_textual_forms() {
        assert_eq!(
            "constant 1".parse::<SignalSpec>().unwrap(),
            SignalSpec::Constant(1.0)
        );
        assert_eq!(
            "  pulse 3 5 -0.5 ".parse::<SignalSpec>().unwrap(),
            SignalSpec::pulse(3.0, 5.0, -0.5).unwrap()
        );
        assert_eq!(
            "sum(step 0 1; sum(); pulse 5 7 5)".parse::<SignalSpec>().unwrap(),
            SignalSpec::Sum(vec![
                SignalSpec::step(0.0, 1.0).unwrap(),
                SignalSpec::Sum(vec![]),
                SignalSpec::pulse(5.0, 7.0, 5.0).unwrap(),
            ])
        );
        assert_eq!("sum( )".parse::<SignalSpec>().unwrap(), SignalSpec::Sum(vec![]));
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "",
            "ramp 1 2",
            "step 1",
            "pulse 1 2",
            "constant x",
            "constant inf",
            "pulse 5 3 1",
            "sum(step 0 1",
            "sum(step 0 1))",
            "sum step 0 1",
        ] {
            assert!(bad.parse::<SignalSpec>().is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn active_window_of_shapes() {
        assert_eq!(SignalSpec::zero().active_window(), None);
        assert_eq!(
            SignalSpec::pulse(5.0, 7.0, 0.0).unwrap().active_window(),
            Some((5.0, 7.0))
        );
        let s: SignalSpec = "sum(pulse 3 5 1; pulse 4 6 1)".parse().unwrap();
        assert_eq!(s.active_window(), Some((3.0, 6.0)));
    }

    fn arb_signal() -> impl Strategy<Value = SignalSpec> {
        let leaf = prop_oneof![
            (-10.0..10.0f64).prop_map(SignalSpec::Constant),
            (0.0..10.0f64, -10.0..10.0f64)
                .prop_map(|(onset, amplitude)| SignalSpec::Step { onset, amplitude }),
            (0.0..10.0f64, 0.01..5.0f64, -10.0..10.0f64).prop_map(|(onset, width, amplitude)| {
                SignalSpec::Pulse {
                    onset,
                    offset: onset + width,
                    amplitude,
                }
            }),
        ];
        leaf.prop_recursive(3, 12, 4, |inner| {
            prop::collection::vec(inner, 0..4).prop_map(SignalSpec::Sum)
        })
    }

    proptest! {
        #[test]
        fn pulse_is_zero_at_offset(a in 0.0..100.0f64, w in 1e-6..100.0f64, v in -10.0..10.0f64) {
            let s = SignalSpec::pulse(a, a + w, v).unwrap();
            prop_assert_eq!(s.eval(a + w), 0.0);
        }

        #[test]
        fn sum_is_linear(s1 in arb_signal(), s2 in arb_signal(), t in 0.0..20.0f64) {
            let both = SignalSpec::Sum(vec![s1.clone(), s2.clone()]);
            prop_assert_eq!(both.eval(t), s1.eval(t) + s2.eval(t));
        }

        #[test]
        fn step_shift_consistency(a in 0.0..10.0f64, v in -5.0..5.0f64, t in 0.0..20.0f64) {
            let shifted = SignalSpec::step(a, v).unwrap();
            let base = SignalSpec::step(0.0, v).unwrap();
            prop_assert_eq!(shifted.eval(t), base.eval(t - a));
        }

        #[test]
        fn display_parse_roundtrip(s in arb_signal()) {
            let text = s.to_string();
            let back: SignalSpec = text.parse().unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn evaluation_is_pure(s in arb_signal(), t in 0.0..20.0f64) {
            prop_assert_eq!(s.eval(t).to_bits(), s.clone().eval(t).to_bits());
        }
    }
}
