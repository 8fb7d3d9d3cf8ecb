use crate::error::{Error, Result};

use super::params::{ModelParams, ParamGrads};
use super::train::TrainConfig;

/// First and second moment estimates, flattened in tensor order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let n = params.param_count().total();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. When `cfg.grad_clip` is set, the gradient
/// is first rescaled so its global L2 norm is at most that value.
pub fn adam_step(params: &mut ModelParams, grads: &ParamGrads, state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    let n = params.param_count().total();
    if grads.param_count() != params.param_count() || state.m.len() != n || state.v.len() != n {
        return Err(Error::shape("adam_step", n, grads.param_count().total()));
    }
    let clip = match cfg.grad_clip {
        Some(max_norm) => {
            let norm = grads.l2_norm();
            if norm > max_norm && norm > 0.0 {
                max_norm / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    };
    state.step += 1;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let bc1 = 1.0 - b1.powf(state.step as f64);
    let bc2 = 1.0 - b2.powf(state.step as f64);
    let lr = cfg.learning_rate;

    let mut k = 0;
    for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
        for (w, &gi) in p.iter_mut().zip(g) {
            let gi = gi * clip;
            let m = b1 * state.m[k] + (1.0 - b1) * gi;
            let v = b2 * state.v[k] + (1.0 - b2) * gi * gi;
            state.m[k] = m;
            state.v[k] = v;
            *w -= lr * (m / bc1) / ((v / bc2).sqrt() + cfg.adam_eps);
            k += 1;
        }
    }
    if !params.is_finite() {
        return Err(Error::Numeric("parameters after Adam update".into()));
    }
    Ok(())
}
