//! Control signals, explicit integrators and trajectory containers.
//!
//! Two integrators are provided: classical fixed-step RK4 and an embedded
//! Dormand–Prince 5(4) pair with step-size control. Both record the state
//! derivative at every accepted node so trajectories offer dense output by
//! cubic Hermite interpolation. Angles are kept unwrapped throughout;
//! wrapping into [0, 2π) is a serialization concern.

use thiserror::Error;

use crate::geometry::{Chart, GeomError, VectorField};
use crate::symexpr::Point;

pub const DEFAULT_RK4_STEP: f64 = 1e-3;
pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("time window is empty: t1 = {t1} must exceed t0 = {t0}")]
    EmptyWindow { t0: f64, t1: f64 },
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
    #[error("adaptive step size underflowed at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("time {t} lies outside the trajectory window [{t0}, {t1}]")]
    OutOfWindow { t: f64, t0: f64, t1: f64 },
    #[error("trajectory has {got} nodes, need at least {need}")]
    TooFewNodes { need: usize, got: usize },
    #[error("control slots and fields must pair up: {0}")]
    BadTerms(String),
}

/// A smooth scalar control input b(t).
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSignal {
    Constant(f64),
    /// amplitude·sin(omega·t + phase) + offset
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
        offset: f64,
    },
    /// c₀ + c₁ t + c₂ t² + ...
    Polynomial(Vec<f64>),
}

impl ControlSignal {
    pub fn constant(c: f64) -> ControlSignal {
        ControlSignal::Constant(c)
    }

    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64) -> ControlSignal {
        ControlSignal::Sinusoid {
            amplitude,
            omega,
            phase,
            offset: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ControlSignal::Constant(c) => *c,
            ControlSignal::Sinusoid {
                amplitude,
                omega,
                phase,
                offset,
            } => amplitude * (omega * t + phase).sin() + offset,
            ControlSignal::Polynomial(coeffs) => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
        }
    }
}

/// A t-dependent vector field X_t = Σ_i b_i(t) X_i.
#[derive(Debug, Clone)]
pub struct TDepVectorField {
    chart: Chart,
    terms: Vec<(ControlSignal, VectorField)>,
}

impl TDepVectorField {
    pub fn new(terms: Vec<(ControlSignal, VectorField)>) -> Result<TDepVectorField, OdeError> {
        let chart = terms
            .first()
            .map(|(_, f)| f.chart().clone())
            .ok_or_else(|| OdeError::BadTerms("no terms supplied".into()))?;
        for (_, f) in &terms {
            if *f.chart() != chart {
                return Err(GeomError::ChartMismatch.into());
            }
        }
        Ok(TDepVectorField { chart, terms })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn terms(&self) -> &[(ControlSignal, VectorField)] {
        &self.terms
    }

    pub fn evaluate(&self, t: f64, point: &Point) -> Result<Vec<f64>, OdeError> {
        let mut out = vec![0.0; self.chart.dim()];
        for (signal, field) in &self.terms {
            let b = signal.eval(t);
            if b == 0.0 {
                continue;
            }
            let vals = field.evaluate(point)?;
            for (o, v) in out.iter_mut().zip(vals) {
                *o += b * v;
            }
        }
        Ok(out)
    }

    pub fn evaluate_state(&self, t: f64, state: &[f64]) -> Result<Vec<f64>, OdeError> {
        let point = self.chart.point(state)?;
        self.evaluate(t, &point)
    }
}

/// Integration method selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4 { h: f64 },
    Adaptive { rtol: f64, atol: f64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::Rk4 {
            h: DEFAULT_RK4_STEP,
        }
    }
}

/// A sampled solution curve: strictly increasing times, one state and one
/// state-derivative per node. Periodic coordinates are stored unwrapped.
#[derive(Debug, Clone)]
pub struct Trajectory {
    chart: Chart,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(
        chart: Chart,
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        derivs: Vec<Vec<f64>>,
    ) -> Trajectory {
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(times.len(), states.len());
        debug_assert_eq!(times.len(), derivs.len());
        Trajectory {
            chart,
            times,
            states,
            derivs,
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    pub fn deriv(&self, i: usize) -> &[f64] {
        &self.derivs[i]
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// Dense output by cubic Hermite interpolation on the bracketing
    /// interval (exact at the nodes).
    pub fn sample(&self, t: f64) -> Result<Vec<f64>, OdeError> {
        let (t0, t1) = (self.first_time(), self.last_time());
        if t < t0 - 1e-12 || t > t1 + 1e-12 {
            return Err(OdeError::OutOfWindow { t, t0, t1 });
        }
        let t = t.clamp(t0, t1);
        let k = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(exact) => return Ok(self.states[exact].clone()),
            Err(0) => 0,
            Err(after) => (after - 1).min(self.times.len() - 2),
        };
        let dt = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / dt;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let ya = &self.states[k];
        let yb = &self.states[k + 1];
        let fa = &self.derivs[k];
        let fb = &self.derivs[k + 1];
        Ok((0..ya.len())
            .map(|i| h00 * ya[i] + h10 * dt * fa[i] + h01 * yb[i] + h11 * dt * fb[i])
            .collect())
    }

    /// States with periodic coordinates wrapped into [0, 2π).
    pub fn wrapped_state(&self, i: usize) -> Vec<f64> {
        self.chart.wrap_state(&self.states[i])
    }
}

fn check_finite(state: &[f64], t: f64) -> Result<(), OdeError> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NonFinite { t })
    }
}

/// Integrates dx/dt = X(t, x) over [t0, t1].
pub fn integrate(
    field: &TDepVectorField,
    x0: &[f64],
    t0: f64,
    t1: f64,
    method: Method,
) -> Result<Trajectory, OdeError> {
    if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
        return Err(OdeError::EmptyWindow { t0, t1 });
    }
    if x0.len() != field.chart().dim() {
        return Err(GeomError::StateLength {
            expected: field.chart().dim(),
            got: x0.len(),
        }
        .into());
    }
    match method {
        Method::Rk4 { h } => integrate_rk4(field, x0, t0, t1, h),
        Method::Adaptive { rtol, atol } => integrate_dopri(field, x0, t0, t1, rtol, atol),
    }
}

/// Uniform grid t0 + k·h (last step clipped to land exactly on t1).
pub fn rk4_grid(t0: f64, t1: f64, h: f64) -> Vec<f64> {
    let span = t1 - t0;
    let n = (span / h - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..n).map(|k| t0 + (k as f64) * h).collect();
    times.push(t1);
    times
}

fn integrate_rk4(
    field: &TDepVectorField,
    x0: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
) -> Result<Trajectory, OdeError> {
    if !h.is_finite() || h <= 0.0 {
        return Err(OdeError::BadStep(h));
    }
    let times = rk4_grid(t0, t1, h);
    let dim = x0.len();
    let mut states = Vec::with_capacity(times.len());
    let mut derivs = Vec::with_capacity(times.len());
    let mut y = x0.to_vec();
    let mut f_now = field.evaluate_state(t0, &y)?;
    states.push(y.clone());
    derivs.push(f_now.clone());

    for w in times.windows(2) {
        let (t, t_next) = (w[0], w[1]);
        let dt = t_next - t;
        let k1 = f_now;
        let mut stage = vec![0.0; dim];

        for i in 0..dim {
            stage[i] = y[i] + 0.5 * dt * k1[i];
        }
        let k2 = field.evaluate_state(t + 0.5 * dt, &stage)?;
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * dt * k2[i];
        }
        let k3 = field.evaluate_state(t + 0.5 * dt, &stage)?;
        for i in 0..dim {
            stage[i] = y[i] + dt * k3[i];
        }
        let k4 = field.evaluate_state(t_next, &stage)?;

        for i in 0..dim {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_finite(&y, t_next)?;
        f_now = field.evaluate_state(t_next, &y)?;
        states.push(y.clone());
        derivs.push(f_now.clone());
    }
    Ok(Trajectory::new(
        field.chart().clone(),
        times,
        states,
        derivs,
    ))
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights equal the last A row (FSAL); 4th-order weights below.
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn integrate_dopri(
    field: &TDepVectorField,
    x0: &[f64],
    t0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory, OdeError> {
    let dim = x0.len();
    let span = t1 - t0;
    let h_min = span * 1e-14;

    let mut t = t0;
    let mut y = x0.to_vec();
    let mut f_now = field.evaluate_state(t, &y)?;
    let mut h = (span / 100.0).min(0.1).max(h_min * 10.0);

    let mut times = vec![t0];
    let mut states = vec![y.clone()];
    let mut derivs = vec![f_now.clone()];

    let mut k = vec![vec![0.0; dim]; 7];
    while t < t1 {
        if h < h_min {
            return Err(OdeError::StepUnderflow { t });
        }
        if t + h > t1 {
            h = t1 - t;
        }

        k[0].copy_from_slice(&f_now);
        for stage in 1..7 {
            let mut y_stage = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = DP_A[stage - 1][j];
                if a != 0.0 {
                    for i in 0..dim {
                        y_stage[i] += h * a * kj[i];
                    }
                }
            }
            k[stage] = field.evaluate_state(t + DP_C[stage] * h, &y_stage)?;
        }

        // 5th-order solution is the stage-7 state (FSAL: k[6] = f(t+h, y5)).
        let mut y5 = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = DP_A[5][j];
            if b != 0.0 {
                for i in 0..dim {
                    y5[i] += h * b * kj[i];
                }
            }
        }
        let mut err_norm = 0.0f64;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                let db = (if j < 6 { DP_A[5][j] } else { 0.0 }) - DP_B4[j];
                e += db * kj[i];
            }
            e *= h;
            let scale = atol + rtol * y[i].abs().max(y5[i].abs());
            err_norm = err_norm.max((e / scale).abs());
        }

        if err_norm <= 1.0 {
            check_finite(&y5, t + h)?;
            t += h;
            y = y5;
            f_now = k[6].clone();
            times.push(t);
            states.push(y.clone());
            derivs.push(f_now.clone());
        }

        let scale = if err_norm == 0.0 {
            10.0
        } else {
            0.9 * err_norm.powf(-0.2)
        };
        h *= scale.clamp(0.2, 10.0);
    }
    Ok(Trajectory::new(
        field.chart().clone(),
        times,
        states,
        derivs,
    ))
}

/// Cumulative integral of a scalar function on the supplied grid, one
/// Simpson rule per interval (midpoint refinement), matching the accuracy
/// of the RK4 grid it rides on. Returns a scalar trajectory named `g`.
pub fn quadrature<F>(mut f: F, grid: &[f64], g0: f64) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64) -> Result<f64, OdeError>,
{
    let chart = Chart::scalar("g");
    let mut values = Vec::with_capacity(grid.len());
    let mut derivs = Vec::with_capacity(grid.len());
    let mut acc = g0;
    values.push(vec![acc]);
    let mut f_left = f(grid[0])?;
    derivs.push(vec![f_left]);
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let fm = f(0.5 * (a + b))?;
        let fb = f(b)?;
        acc += (b - a) / 6.0 * (f_left + 4.0 * fm + fb);
        values.push(vec![acc]);
        derivs.push(vec![fb]);
        f_left = fb;
    }
    Ok(Trajectory::new(chart, grid.to_vec(), values, derivs))
}
