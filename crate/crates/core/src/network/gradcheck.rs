use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::Rng;

use super::model::{backward, forward, loss, loss_grad};
use super::params::{ModelParams, TENSOR_NAMES};

/// Toy problem sizes and tolerances for [`gradcheck`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradcheckConfig {
    pub seed: u64,
    pub draws: usize,
    pub hidden: usize,
    pub dim: usize,
    pub horizon: usize,
    /// Cycled over the draws.
    pub lambdas: Vec<f64>,
    pub epsilon: f64,
    /// Denominator floor in the relative error, so entries whose gradient is
    /// near zero are judged on absolute error.
    pub floor: f64,
    pub init_scale: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            draws: 50,
            hidden: 3,
            dim: 4,
            horizon: 2,
            lambdas: vec![0.0, 1.0, 0.3],
            epsilon: 1e-5,
            floor: 1e-6,
            init_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub draws: usize,
    pub parameters_checked: usize,
    pub max_rel_error: f64,
    /// Tensor name and flat index of the worst entry.
    pub worst_tensor: String,
    pub worst_index: usize,
    pub worst_draw: usize,
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn locate(params: &ModelParams, flat: usize) -> (String, usize) {
    let mut offset = 0;
    for (t, name) in params.tensors().iter().zip(TENSOR_NAMES) {
        if flat < offset + t.len() {
            return (name.to_string(), flat - offset);
        }
        offset += t.len();
    }
    (String::new(), flat)
}

/// Compares backprop gradients of one-window losses with central differences
/// on randomly drawn small models, windows and targets.
pub fn gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    let mut rng = Rng::new(cfg.seed);
    let mut report = GradcheckReport {
        draws: cfg.draws,
        parameters_checked: 0,
        max_rel_error: 0.0,
        worst_tensor: String::new(),
        worst_index: 0,
        worst_draw: 0,
    };
    for draw in 0..cfg.draws {
        let lambda = if cfg.lambdas.is_empty() {
            1.0
        } else {
            cfg.lambdas[draw % cfg.lambdas.len()]
        };
        let mut p = ModelParams::init_uniform(cfg.hidden, 1, cfg.horizon, cfg.init_scale, &mut rng)?;
        let x: Vec<f64> = (0..cfg.dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let xd: Vec<f64> = (0..cfg.dim - 1).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let ty: Vec<f64> = (0..cfg.horizon).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let tyd: Vec<f64> = (0..cfg.horizon).map(|_| rng.uniform(-1.0, 1.0)).collect();

        let (pred, tape) = forward(&p, &x, &xd)?;
        let g = loss_grad(&pred, &ty, &tyd, lambda, cfg.horizon as f64);
        let analytic = backward(&p, &tape, &g).to_flat();

        let base = p.to_flat();
        let mut work = base.clone();
        for k in 0..base.len() {
            work[k] = base[k] + cfg.epsilon;
            p.set_flat(&work)?;
            let up = loss(&forward(&p, &x, &xd)?.0, &ty, &tyd, lambda);
            work[k] = base[k] - cfg.epsilon;
            p.set_flat(&work)?;
            let down = loss(&forward(&p, &x, &xd)?.0, &ty, &tyd, lambda);
            work[k] = base[k];
            let numeric = (up - down) / (2.0 * cfg.epsilon);
            let err = relative_error(analytic[k], numeric, cfg.floor);
            if err > report.max_rel_error {
                let (name, idx) = locate(&p, k);
                report.max_rel_error = err;
                report.worst_tensor = name;
                report.worst_index = idx;
                report.worst_draw = draw;
            }
        }
        p.set_flat(&base)?;
        report.parameters_checked += base.len();
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_draws_pass() {
        let r = gradcheck(&GradcheckConfig::default()).unwrap();
        assert_eq!(r.draws, 50);
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0, 1e-6), 0.0);
        assert!((relative_error(2.0, 1.0, 1e-6) - 0.5).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0, 1e-6) - 1e-3).abs() < 1e-15);
    }
}
