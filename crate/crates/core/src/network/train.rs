use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::preprocess::WindowedDataset;

use super::adam::{adam_step, AdamState};
use super::model::batch_loss_and_grad;
use super::params::ModelParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Weight of the derivative-stream loss.
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Global L2 norm cap on each minibatch gradient.
    pub grad_clip: Option<f64>,
    /// Width of the shared cell's hidden state.
    pub hidden: usize,
    /// Initial weights are uniform on `[-s, s)`; `None` means `1/sqrt(hidden)`.
    pub init_scale: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            learning_rate: 0.005,
            epochs: 300,
            batch_size: 32,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            grad_clip: None,
            hidden: 10,
            init_scale: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be a finite value >= 0, got {}", self.lambda));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.adam_eps > 0.0) {
            return bad(format!("adam_eps must be positive, got {}", self.adam_eps));
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return bad("batch_size and hidden must be positive".into());
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return bad(format!("grad_clip must be positive, got {c}"));
            }
        }
        if let Some(s) = self.init_scale {
            if !(s > 0.0) {
                return bad(format!("init_scale must be positive, got {s}"));
            }
        }
        Ok(())
    }

    pub fn init_scale(&self) -> f64 {
        self.init_scale.unwrap_or(1.0 / (self.hidden as f64).sqrt())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Composite training loss for each epoch, averaged over its minibatches
    /// by window count.
    pub loss_history: Vec<f64>,
}

/// Fresh parameters for `cfg`, drawn from the seed's stream.
pub fn init_params(horizon: usize, cfg: &TrainConfig, rng: &mut Rng) -> Result<ModelParams> {
    ModelParams::init_uniform(cfg.hidden, 1, horizon, cfg.init_scale(), rng)
}

/// Minibatch Adam over shuffled windows. The seed fixes both the initial
/// weights and every epoch's shuffle order.
pub fn train(ds: &WindowedDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut rng = Rng::new(cfg.seed);
    let params = init_params(ds.spec.horizon, cfg, &mut rng)?;
    train_from(ds, cfg, params, &mut rng)
}

/// As [`train`], continuing from given parameters and random stream.
pub fn train_from(ds: &WindowedDataset, cfg: &TrainConfig, mut params: ModelParams, rng: &mut Rng) -> Result<TrainOutcome> {
    cfg.validate()?;
    ds.validate()?;
    if ds.is_empty() {
        return Err(Error::Parameter("training set has no windows".into()));
    }
    let mut state = AdamState::new(&params);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut last_finite: Option<f64> = None;

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let fail = |cause: String| Error::Training {
                epoch,
                last_finite_loss: last_finite,
                cause,
            };
            let (parts, grads) = batch_loss_and_grad(&params, ds, batch, cfg.lambda).map_err(|e| fail(e.to_string()))?;
            let l = parts.total();
            if !l.is_finite() {
                return Err(fail("non-finite minibatch loss".into()));
            }
            epoch_loss += l * batch.len() as f64;
            adam_step(&mut params, &grads, &mut state, cfg).map_err(|e| fail(e.to_string()))?;
        }
        let mean = epoch_loss / ds.len() as f64;
        last_finite = Some(mean);
        history.push(mean);
    }
    Ok(TrainOutcome {
        params,
        loss_history: history,
    })
}
