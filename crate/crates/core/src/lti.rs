//! Discrete-time SISO linear systems in state-space form.

use nalgebra::{DMatrix, DVector, RowDVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LtiError {
    #[error("coefficient list is empty")]
    EmptyPolynomial,
    #[error("leading denominator coefficient is zero")]
    ZeroLeadingCoefficient,
    #[error("improper transfer function: numerator has {num} coefficients, denominator {den}")]
    Improper { num: usize, den: usize },
    #[error("coefficient is not finite: {0}")]
    NonFinite(f64),
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("(I - A) is singular; the system has a pole at z = 1")]
    SingularDcGain,
}

/// `x' = A x + B u`, `y = C x + D u` with a single input and output.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: RowDVector<f64>,
    d: f64,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: RowDVector<f64>,
        d: f64,
    ) -> Result<Self, LtiError> {
        let n = a.nrows();
        if n == 0 {
            return Err(LtiError::Dimension("state order must be at least 1".into()));
        }
        if a.ncols() != n {
            return Err(LtiError::Dimension(format!(
                "A is {}x{}, expected square",
                n,
                a.ncols()
            )));
        }
        if b.len() != n || c.len() != n {
            return Err(LtiError::Dimension(format!(
                "order {n} needs B and C of length {n}, got {} and {}",
                b.len(),
                c.len()
            )));
        }
        if let Some(v) = a.iter().chain(b.iter()).chain(c.iter()).chain([&d]).find(|v| !v.is_finite()) {
            return Err(LtiError::NonFinite(*v));
        }
        Ok(Self { a, b, c, d })
    }

    /// Scalar first-order system.
    pub fn scalar(a: f64, b: f64, c: f64, d: f64) -> Result<Self, LtiError> {
        Self::new(
            DMatrix::from_element(1, 1, a),
            DVector::from_element(1, b),
            RowDVector::from_element(1, c),
            d,
        )
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &RowDVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// One sample of the system. The output is computed from the incoming
    /// state, then the state is advanced.
    pub fn step(&self, state: &LtiState, u: f64) -> Result<(LtiState, f64), LtiError> {
        if state.0.len() != self.order() {
            return Err(LtiError::Dimension(format!(
                "state has length {}, model order is {}",
                state.0.len(),
                self.order()
            )));
        }
        let y = self.c.dot(&state.0.transpose()) + self.d * u;
        let next = &self.a * &state.0 + &self.b * u;
        Ok((LtiState(next), y))
    }

    /// Steady-state output per unit constant input, `C (I - A)^-1 B + D`.
    pub fn dc_gain(&self) -> Result<f64, LtiError> {
        let n = self.order();
        let m = DMatrix::identity(n, n) - &self.a;
        let x = m.lu().solve(&self.b).ok_or(LtiError::SingularDcGain)?;
        let g = self.c.dot(&x.transpose()) + self.d;
        if g.is_finite() {
            Ok(g)
        } else {
            Err(LtiError::SingularDcGain)
        }
    }

    /// Response to a unit impulse at k = 0 from the zero state.
    pub fn impulse_response(&self, samples: usize) -> Vec<f64> {
        let mut state = LtiState::zeros(self.order());
        (0..samples)
            .map(|k| {
                let u = if k == 0 { 1.0 } else { 0.0 };
                let (next, y) = self.step(&state, u).expect("state sized from model");
                state = next;
                y
            })
            .collect()
    }
}

/// Internal state vector of a [`StateSpaceModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct LtiState(pub DVector<f64>);

impl LtiState {
    pub fn zeros(n: usize) -> Self {
        LtiState(DVector::zeros(n))
    }

    pub fn from_slice(values: &[f64]) -> Self {
        LtiState(DVector::from_column_slice(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Controllable-canonical realization of `num(z) / den(z)`.
///
/// Coefficients are given highest power first. A pure gain (`den` of length 1)
/// is padded to a first-order realization with zero dynamics.
pub fn tf_to_ss(num: &[f64], den: &[f64]) -> Result<StateSpaceModel, LtiError> {
    if num.is_empty() || den.is_empty() {
        return Err(LtiError::EmptyPolynomial);
    }
    if let Some(v) = num.iter().chain(den).find(|v| !v.is_finite()) {
        return Err(LtiError::NonFinite(*v));
    }
    if den[0] == 0.0 {
        return Err(LtiError::ZeroLeadingCoefficient);
    }
    if num.len() > den.len() {
        return Err(LtiError::Improper {
            num: num.len(),
            den: den.len(),
        });
    }

    let lead = den[0];
    let n = den.len() - 1;
    let den: Vec<f64> = den.iter().map(|v| v / lead).collect();
    let mut padded = vec![0.0; den.len() - num.len()];
    padded.extend(num.iter().map(|v| v / lead));

    if n == 0 {
        return StateSpaceModel::scalar(0.0, 0.0, 0.0, padded[0]);
    }

    // num = d * den + remainder, remainder has degree < n.
    let d = padded[0];
    let c = RowDVector::from_iterator(n, (1..=n).map(|i| padded[i] - d * den[i]));
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -den[j + 1];
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[0] = 1.0;
    StateSpaceModel::new(a, b, c, d)
}
