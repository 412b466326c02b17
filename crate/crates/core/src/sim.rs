//! Controller canonical realization of 1/Δ(s), input generation, and
//! fixed-step simulation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{matrix_eigenvalues, PolyError, Polynomial, Square};

/// Minimum number of integration steps per period of the fastest mode.
pub const STEPS_PER_PERIOD: f64 = 40.0;
/// Relative |Δ(s)| below which `transfer_eval` refuses to divide.
pub const POLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("dt = {dt} exceeds the resolution limit {max_dt} (2π / (40·{omega_max}))")]
    ResolutionViolation { dt: f64, max_dt: f64, omega_max: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("input event at t = {t} lies beyond the horizon t_end = {t_end}")]
    EventBeyondHorizon { t: f64, t_end: f64 },
    #[error("s = {s} is within tolerance of a pole (|Δ(s)| = {magnitude:e})")]
    PoleProximity { s: Complex64, magnitude: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl Signal {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self, SimError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimError::InvalidInput(format!("dt must be finite and > 0, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(SimError::InvalidInput("t0 must be finite".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SimError::InvalidInput(format!("sample {i} is not finite")));
        }
        Ok(Self { t0, dt, samples })
    }

    /// Samples `f` on t0 + k·dt for k = 0..len.
    pub fn from_fn(t0: f64, dt: f64, len: usize, f: impl Fn(f64) -> f64) -> Result<Self, SimError> {
        Self::new(t0, dt, (0..len).map(|k| f(t0 + k as f64 * dt)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    /// Time between the first and last sample.
    pub fn duration(&self) -> f64 {
        self.len().saturating_sub(1) as f64 * self.dt
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt - 1e-9).ceil().max(0.0) as usize).min(self.len())
    }

    /// Zero-order-hold value at `t`; clamps to the first/last sample outside the range.
    pub fn hold(&self, t: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let k = ((t - self.t0) / self.dt + 1e-9).floor();
        let k = if k < 0.0 { 0 } else { (k as usize).min(self.len() - 1) };
        self.samples[k]
    }

    pub fn scaled(&self, c: f64) -> Signal {
        Signal {
            t0: self.t0,
            dt: self.dt,
            samples: self.samples.iter().map(|v| v * c).collect(),
        }
    }

    /// Copy of the samples from `t` onward.
    pub fn tail_from(&self, t: f64) -> Signal {
        let k = self.index_at(t);
        Signal {
            t0: self.time(k),
            dt: self.dt,
            samples: self.samples[k..].to_vec(),
        }
    }
}

/// Dirac impulse g·δ(t − t₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impulse {
    pub t: f64,
    pub area: f64,
}

/// Piecewise-constant input taking `level` from `start` until the next step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub start: f64,
    pub level: f64,
}

/// Input description. JSON form is tagged by `"type"`:
///
/// ```json
/// {"type": "impulses", "events": [{"t": 0, "area": 0.5}, {"t": 100, "area": 1}]}
/// {"type": "steps", "steps": [{"start": 0, "level": 0.5}, {"start": 50, "level": 1}]}
/// {"type": "zero"}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Impulses { events: Vec<Impulse> },
    Steps { steps: Vec<Step> },
    Zero,
}

impl InputSpec {
    pub fn impulse(area: f64) -> Self {
        InputSpec::Impulses {
            events: vec![Impulse { t: 0.0, area }],
        }
    }

    pub fn step(level: f64) -> Self {
        InputSpec::Steps {
            steps: vec![Step { start: 0.0, level }],
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let times: Vec<f64> = match self {
            InputSpec::Impulses { events } => {
                if let Some(e) = events.iter().find(|e| !e.area.is_finite()) {
                    return Err(SimError::InvalidInput(format!("impulse area at t = {} is not finite", e.t)));
                }
                events.iter().map(|e| e.t).collect()
            }
            InputSpec::Steps { steps } => {
                if let Some(s) = steps.iter().find(|s| !s.level.is_finite()) {
                    return Err(SimError::InvalidInput(format!("step level at t = {} is not finite", s.start)));
                }
                steps.iter().map(|s| s.start).collect()
            }
            InputSpec::Zero => Vec::new(),
        };
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(SimError::InvalidInput(format!("event time {t} must be finite and >= 0")));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidInput("event times must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// A sampled input together with its impulse events, which are applied as
/// state jumps rather than samples.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSignal {
    pub signal: Signal,
    pub impulses: Vec<Impulse>,
}

impl InputSignal {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            signal: self.signal.scaled(c),
            impulses: self
                .impulses
                .iter()
                .map(|e| Impulse { t: e.t, area: e.area * c })
                .collect(),
        }
    }

    /// Sum of two inputs on the same grid.
    pub fn superpose(&self, other: &InputSignal) -> Result<Self, SimError> {
        if self.signal.len() != other.signal.len()
            || self.signal.dt != other.signal.dt
            || self.signal.t0 != other.signal.t0
        {
            return Err(SimError::InvalidInput("inputs are sampled on different grids".into()));
        }
        let samples = self
            .signal
            .samples
            .iter()
            .zip(&other.signal.samples)
            .map(|(a, b)| a + b)
            .collect();
        let mut impulses: Vec<Impulse> = self.impulses.iter().chain(&other.impulses).copied().collect();
        impulses.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(Self {
            signal: Signal::new(self.signal.t0, self.signal.dt, samples)?,
            impulses,
        })
    }
}

fn grid_len(t_end: f64, dt: f64) -> Result<usize, SimError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(SimError::InvalidInput(format!("t_end must be finite and > 0, got {t_end}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::InvalidInput(format!("dt must be finite and > 0, got {dt}")));
    }
    let steps = (t_end / dt).round();
    if steps > 1e9 {
        return Err(SimError::InvalidInput(format!("t_end/dt = {steps} steps is too many")));
    }
    Ok(steps as usize + 1)
}

/// Nearest grid index to `t`.
fn snap(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

/// Samples an input on 0, dt, …, t_end.
///
/// Step levels hold on left-closed intervals `[start, next start)`, with each
/// transition snapped to the nearest grid point; the input is zero before the
/// first step. Impulses are returned as events.
pub fn make_input(spec: &InputSpec, t_end: f64, dt: f64) -> Result<InputSignal, SimError> {
    spec.validate()?;
    let len = grid_len(t_end, dt)?;
    let horizon = |t: f64| {
        if t > t_end * (1.0 + 1e-12) {
            Err(SimError::EventBeyondHorizon { t, t_end })
        } else {
            Ok(())
        }
    };
    let mut samples = vec![0.0; len];
    let mut impulses = Vec::new();
    match spec {
        InputSpec::Zero => {}
        InputSpec::Impulses { events } => {
            for e in events {
                horizon(e.t)?;
            }
            impulses = events.clone();
        }
        InputSpec::Steps { steps } => {
            for s in steps {
                horizon(s.start)?;
            }
            for (i, s) in steps.iter().enumerate() {
                let from = snap(s.start, dt).min(len);
                let to = steps.get(i + 1).map_or(len, |next| snap(next.start, dt).min(len));
                for v in &mut samples[from..to] {
                    *v = s.level;
                }
            }
        }
    }
    Ok(InputSignal {
        signal: Signal::new(0.0, dt, samples)?,
        impulses,
    })
}

/// SISO state-space model with D = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: RowDVector<f64>,
    d: f64,
}

impl StateSpaceModel {
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

    pub fn order(&self) -> usize {
        self.b.len()
    }

    /// Eigenvalues of A.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>, SimError> {
        let n = self.order();
        matrix_eigenvalues(Square::from_fn(n, |i, j| self.a[(i, j)])).map_err(|_| SimError::NoConvergence)
    }

    /// C(sI − A)⁻¹B + D by a dense complex solve.
    pub fn transfer(&self, s: Complex64) -> Result<Complex64, SimError> {
        let n = self.order();
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let rhs = DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(self.b[i], 0.0));
        let x = m.lu().solve(&rhs).ok_or(SimError::PoleProximity {
            s,
            magnitude: 0.0,
        })?;
        let y: Complex64 = (0..n).map(|i| x[i] * self.c[i]).sum();
        Ok(y + self.d)
    }

    /// Largest eigenvalue magnitude, which bounds the admissible step.
    pub fn max_frequency(&self) -> Result<f64, SimError> {
        Ok(self.eigenvalues()?.iter().fold(0.0, |m, z| m.max(z.norm())))
    }

    /// Largest step allowed by the 40-steps-per-period resolution rule.
    pub fn max_step(&self) -> Result<f64, SimError> {
        let w = self.max_frequency()?;
        Ok(if w > 0.0 { 2.0 * PI / (STEPS_PER_PERIOD * w) } else { f64::INFINITY })
    }
}

/// Controller canonical form of T(s) = 1/Δ(s).
///
/// A's first row is −(αₙ₋₁, …, α₀)/αₙ with ones on the subdiagonal,
/// B = (1/αₙ, 0, …, 0)ᵀ, C = (0, …, 0, 1), D = 0.
pub fn canonical_state_space(poly: &Polynomial) -> Result<StateSpaceModel, SimError> {
    let n = poly.degree();
    let alpha = poly.coeffs();
    let lead = poly.leading();
    if lead == 0.0 {
        return Err(PolyError::DegenerateLeadingCoefficient {
            value: lead,
            tolerance: 0.0,
        }
        .into());
    }
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == 0 {
            -alpha[n - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut b = DVector::zeros(n);
    b[0] = 1.0 / lead;
    let mut c = RowDVector::zeros(n);
    c[n - 1] = 1.0;
    Ok(StateSpaceModel { a, b, c, d: 0.0 })
}

/// T(s) = 1/Δ(s).
pub fn transfer_eval(poly: &Polynomial, s: Complex64) -> Result<Complex64, SimError> {
    let delta = poly.evaluate(s);
    let magnitude = delta.norm();
    if magnitude <= POLE_TOLERANCE * poly.evaluation_scale(s) {
        return Err(SimError::PoleProximity { s, magnitude });
    }
    Ok(1.0 / delta)
}

/// Classical RK4 on x' = Ax + Bu, y = Cx, over 0, dt, …, t_end.
///
/// The input is held constant over each step at its value at the step start.
/// Each impulse (t₀, g) becomes the jump x ← x + B·g at the grid point nearest
/// t₀, applied before that point's output sample is taken.
pub fn simulate(
    model: &StateSpaceModel,
    input: &InputSignal,
    t_end: f64,
    dt: f64,
    x0: Option<&[f64]>,
) -> Result<Signal, SimError> {
    let len = grid_len(t_end, dt)?;
    let n = model.order();

    let omega_max = model.max_frequency()?;
    if omega_max > 0.0 {
        let max_dt = 2.0 * PI / (STEPS_PER_PERIOD * omega_max);
        if dt > max_dt * (1.0 + 1e-12) {
            return Err(SimError::ResolutionViolation { dt, max_dt, omega_max });
        }
    }

    let mut x = match x0 {
        Some(v) if v.len() != n => {
            return Err(SimError::InvalidInput(format!(
                "initial state has {} entries, model order is {n}",
                v.len()
            )))
        }
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(n),
    };

    let mut jumps: Vec<(usize, f64)> = Vec::with_capacity(input.impulses.len());
    for e in &input.impulses {
        if e.t > t_end * (1.0 + 1e-12) {
            return Err(SimError::EventBeyondHorizon { t: e.t, t_end });
        }
        jumps.push((snap(e.t, dt), e.area));
    }
    jumps.sort_by_key(|j| j.0);
    let mut next_jump = 0;

    let a = &model.a;
    let b = &model.b;
    let half = 0.5 * dt;
    let mut k1 = DVector::zeros(n);
    let mut k2 = DVector::zeros(n);
    let mut k3 = DVector::zeros(n);
    let mut k4 = DVector::zeros(n);
    let mut tmp = DVector::zeros(n);
    let mut y = Vec::with_capacity(len);

    for k in 0..len {
        while next_jump < jumps.len() && jumps[next_jump].0 == k {
            x.axpy(jumps[next_jump].1, b, 1.0);
            next_jump += 1;
        }
        let out = model.c.dot(&x.transpose()) + model.d * input.signal.hold(k as f64 * dt);
        if !out.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFiniteState { t: k as f64 * dt });
        }
        y.push(out);
        if k + 1 == len {
            break;
        }

        let u = input.signal.hold(k as f64 * dt);
        k1.gemv(1.0, a, &x, 0.0);
        k1.axpy(u, b, 1.0);

        tmp.copy_from(&x);
        tmp.axpy(half, &k1, 1.0);
        k2.gemv(1.0, a, &tmp, 0.0);
        k2.axpy(u, b, 1.0);

        tmp.copy_from(&x);
        tmp.axpy(half, &k2, 1.0);
        k3.gemv(1.0, a, &tmp, 0.0);
        k3.axpy(u, b, 1.0);

        tmp.copy_from(&x);
        tmp.axpy(dt, &k3, 1.0);
        k4.gemv(1.0, a, &tmp, 0.0);
        k4.axpy(u, b, 1.0);

        x.axpy(dt / 6.0, &k1, 1.0);
        x.axpy(dt / 3.0, &k2, 1.0);
        x.axpy(dt / 3.0, &k3, 1.0);
        x.axpy(dt / 6.0, &k4, 1.0);
    }

    Signal::new(0.0, dt, y)
}
