//! Benchmark chaotic systems integrated with classical RK4.
//!
//! Every generator returns the observed x-coordinate together with its
//! analytic first derivative, evaluated from the governing equations at each
//! retained sample.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Vector;

/// Magnitude past which a trajectory is treated as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub values: Vec<f64>,
    /// Spacing between consecutive samples, in model time units.
    pub dt: f64,
    pub name: String,
    /// Name of the series this one is the derivative of, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_of: Option<String>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>, dt: f64) -> Result<Self> {
        let s = Self {
            values,
            dt,
            name: name.into(),
            derivative_of: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn derivative(name: impl Into<String>, values: Vec<f64>, dt: f64, of: &Series) -> Result<Self> {
        let mut s = Self::new(name, values, dt)?;
        s.derivative_of = Some(of.name.clone());
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Parameter(format!("series '{}' is empty", self.name)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Parameter(format!("series '{}' has dt {}", self.name, self.dt)));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("series '{}' sample {i}", self.name)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One classical fourth-order Runge-Kutta step of an autonomous system.
pub fn rk4_step<F>(mut f: F, state: &Vector, dt: f64) -> Result<Vector>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    rk4_step_timed(|_, s| f(s), state, dt)
}

/// RK4 step where the field also receives the stage time offset (0, dt/2 or
/// dt) from the start of the step. Used for the delay system, whose delayed
/// term differs between stages.
pub fn rk4_step_timed<F>(mut f: F, state: &Vector, dt: f64) -> Result<Vector>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let y = state.as_slice();
    let n = y.len();
    let check = |k: &[f64], stage: usize| -> Result<()> {
        if k.len() != n {
            return Err(Error::shape("rk4_step field output", n, k.len()));
        }
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Integration {
                step: 0,
                reason: format!("non-finite derivative at stage {stage}"),
            })
        }
    };
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(yi, ki)| yi + a * ki).collect() };

    let k1 = f(0.0, y);
    check(&k1, 1)?;
    let k2 = f(0.5 * dt, &axpy(0.5 * dt, &k1));
    check(&k2, 2)?;
    let k3 = f(0.5 * dt, &axpy(0.5 * dt, &k2));
    check(&k3, 3)?;
    let k4 = f(dt, &axpy(dt, &k3));
    check(&k4, 4)?;

    let out = (0..n)
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    Ok(Vector::from_vec(out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MackeyGlassParams {
    pub alpha: f64,
    /// Signed coefficient of the linear term. The chaotic regime needs decay,
    /// so the default is negative.
    pub beta: f64,
    /// Exponent of the delayed feedback.
    pub c: f64,
    pub tau: f64,
    pub x0: f64,
    pub dt: f64,
    pub n_samples: usize,
    /// Integrator steps between retained samples.
    pub sample_every: usize,
    /// Retained samples dropped from the front.
    pub warmup: usize,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            beta: -0.1,
            c: 10.0,
            tau: 17.0,
            x0: 1.2,
            dt: 0.1,
            n_samples: 1000,
            sample_every: 1,
            warmup: 0,
        }
    }
}

impl MackeyGlassParams {
    /// Delay length in integrator steps.
    pub fn delay_steps(&self) -> Result<usize> {
        if !(self.tau > 0.0) || !(self.dt > 0.0) {
            return Err(Error::Parameter(format!(
                "Mackey-Glass needs tau > 0 and dt > 0 (tau {}, dt {})",
                self.tau, self.dt
            )));
        }
        let ratio = self.tau / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Parameter(format!("tau/dt = {ratio} is not an integer")));
        }
        Ok(steps as usize)
    }

    fn validate(&self) -> Result<usize> {
        let d = self.delay_steps()?;
        validate_sampling(self.n_samples, self.sample_every)?;
        Ok(d)
    }

    /// Right-hand side given the current and the delayed value.
    pub fn field(&self, x: f64, delayed: f64) -> f64 {
        self.beta * x + self.alpha * delayed / (1.0 + delayed.powf(self.c))
    }
}

fn validate_sampling(n_samples: usize, sample_every: usize) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::Parameter("n_samples must be positive".into()));
    }
    if sample_every == 0 {
        return Err(Error::Parameter("sample_every must be positive".into()));
    }
    Ok(())
}

fn guard(index: usize, value: f64) -> Result<()> {
    if !value.is_finite() || value.abs() > DIVERGENCE_LIMIT {
        Err(Error::Generation { index, value })
    } else {
        Ok(())
    }
}

/// Mackey-Glass delay equation `x' = beta·x + alpha·x_tau / (1 + x_tau^c)`
/// with zero history before t = 0.
///
/// The delayed value sits in a ring buffer of `tau/dt + 1` past samples; the
/// RK4 half-step stages read it linearly interpolated between slots.
pub fn generate_mackey_glass(p: &MackeyGlassParams) -> Result<(Series, Series)> {
    let delay = p.validate()?;
    let total = (p.warmup + p.n_samples - 1) * p.sample_every + 1;

    // history[0] is x(t - tau), history[delay] is x(t).
    let mut history: VecDeque<f64> = VecDeque::with_capacity(delay + 1);
    history.extend(std::iter::repeat(0.0).take(delay));
    history.push_back(p.x0);

    let mut values = Vec::with_capacity(p.n_samples);
    let mut diffs = Vec::with_capacity(p.n_samples);
    let mut x = Vector::from_vec(vec![p.x0]);

    for step in 0..total {
        let (d0, d1) = (history[0], history.get(1).copied().unwrap_or(x[0]));
        if step % p.sample_every == 0 {
            let retained = step / p.sample_every;
            if retained >= p.warmup {
                guard(retained - p.warmup, x[0])?;
                values.push(x[0]);
                diffs.push(p.field(x[0], d0));
            }
        }
        if step + 1 == total {
            break;
        }
        let dt = p.dt;
        x = rk4_step_timed(
            |offset, s| {
                let frac = offset / dt;
                let delayed = d0 + frac * (d1 - d0);
                vec![p.field(s[0], delayed)]
            },
            &x,
            dt,
        )
        .map_err(|e| at_step(e, step))?;
        guard(step + 1, x[0]).map_err(|_| Error::Generation {
            index: (step + 1) / p.sample_every,
            value: x[0],
        })?;
        history.pop_front();
        history.push_back(x[0]);
    }

    let sample_dt = p.dt * p.sample_every as f64;
    let series = Series::new("mackey_glass", values, sample_dt)?;
    let diff = Series::derivative("mackey_glass_diff", diffs, sample_dt, &series)?;
    Ok((series, diff))
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::Integration { reason, .. } => Error::Integration { step, reason },
        other => other,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub initial: [f64; 3],
    pub dt: f64,
    pub n_samples: usize,
    pub sample_every: usize,
    pub warmup: usize,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            initial: [1.0, 1.0, 1.0],
            dt: 0.01,
            n_samples: 1000,
            sample_every: 1,
            warmup: 0,
        }
    }
}

impl LorenzParams {
    pub fn field(&self, s: &[f64]) -> Vec<f64> {
        let (x, y, z) = (s[0], s[1], s[2]);
        vec![self.sigma * (y - x), x * (self.rho - z) - y, x * y - self.beta * z]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RosslerParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub initial: [f64; 3],
    pub dt: f64,
    pub n_samples: usize,
    pub sample_every: usize,
    pub warmup: usize,
}

impl Default for RosslerParams {
    fn default() -> Self {
        Self {
            a: 0.15,
            b: 0.20,
            c: 10.0,
            initial: [1.0, 1.0, 1.0],
            dt: 0.1,
            n_samples: 1000,
            sample_every: 1,
            warmup: 0,
        }
    }
}

impl RosslerParams {
    pub fn field(&self, s: &[f64]) -> Vec<f64> {
        let (x, y, z) = (s[0], s[1], s[2]);
        vec![-y - z, x + self.a * y, self.b + (x - self.c) * z]
    }
}

struct FlowSpec<'a> {
    name: &'a str,
    initial: [f64; 3],
    dt: f64,
    n_samples: usize,
    sample_every: usize,
    warmup: usize,
}

fn integrate_flow<F>(spec: FlowSpec<'_>, field: F) -> Result<(Series, Series)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    validate_sampling(spec.n_samples, spec.sample_every)?;
    if !(spec.dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {}", spec.dt)));
    }
    let total = (spec.warmup + spec.n_samples - 1) * spec.sample_every + 1;
    let mut state = Vector::from_vec(spec.initial.to_vec());
    let mut values = Vec::with_capacity(spec.n_samples);
    let mut diffs = Vec::with_capacity(spec.n_samples);

    for step in 0..total {
        if step % spec.sample_every == 0 {
            let retained = step / spec.sample_every;
            if retained >= spec.warmup {
                let idx = retained - spec.warmup;
                guard(idx, state[0])?;
                values.push(state[0]);
                diffs.push(field(state.as_slice())[0]);
            }
        }
        if step + 1 == total {
            break;
        }
        state = rk4_step(&field, &state, spec.dt).map_err(|e| at_step(e, step))?;
        if let Some(&bad) = state.as_slice().iter().find(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Generation {
                index: (step + 1) / spec.sample_every,
                value: bad,
            });
        }
    }

    let sample_dt = spec.dt * spec.sample_every as f64;
    let series = Series::new(spec.name, values, sample_dt)?;
    let diff = Series::derivative(format!("{}_diff", spec.name), diffs, sample_dt, &series)?;
    Ok((series, diff))
}

/// Lorenz x-coordinate and its analytic derivative `sigma·(y − x)`.
pub fn generate_lorenz(p: &LorenzParams) -> Result<(Series, Series)> {
    integrate_flow(
        FlowSpec {
            name: "lorenz",
            initial: p.initial,
            dt: p.dt,
            n_samples: p.n_samples,
            sample_every: p.sample_every,
            warmup: p.warmup,
        },
        |s| p.field(s),
    )
}

/// Rössler x-coordinate and its analytic derivative `−y − z`.
pub fn generate_rossler(p: &RosslerParams) -> Result<(Series, Series)> {
    integrate_flow(
        FlowSpec {
            name: "rossler",
            initial: p.initial,
            dt: p.dt,
            n_samples: p.n_samples,
            sample_every: p.sample_every,
            warmup: p.warmup,
        },
        |s| p.field(s),
    )
}
