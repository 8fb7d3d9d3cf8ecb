use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{matvec_acc, matvec_t_acc, outer_acc, Matrix, Vector};
use crate::preprocess::WindowedDataset;

use super::cell::{backward_stream, run_stream, StepRecord};
use super::params::{ModelParams, ParamGrads};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Next `H` values of the series.
    pub y: Vector,
    /// Next `H` values of the derivative series.
    pub yd: Vector,
}

/// Everything the reverse pass needs from one forward call.
#[derive(Clone, Debug)]
pub struct Tape {
    orig: Vec<StepRecord>,
    diff: Vec<StepRecord>,
    x: Vec<f64>,
    xd: Vec<f64>,
    features: Vec<f64>,
}

impl Tape {
    /// `[h_final ; h̄_final]`, the input of both heads.
    pub fn features(&self) -> &[f64] {
        &self.features
    }
}

/// Runs the shared cell over the value window and, from a fresh zero state,
/// over the derivative window, then applies both linear heads to the
/// concatenated final hidden states.
pub fn forward(p: &ModelParams, x_window: &[f64], xd_window: &[f64]) -> Result<(Prediction, Tape)> {
    let id = p.input_dim;
    if x_window.is_empty() || x_window.len() % id != 0 {
        return Err(Error::shape("forward value window", format!("multiple of {id}"), x_window.len()));
    }
    if xd_window.len() + id != x_window.len() {
        return Err(Error::shape(
            "forward derivative window",
            x_window.len().saturating_sub(id),
            xd_window.len(),
        ));
    }
    let orig = run_stream(p, x_window)?;
    let diff = run_stream(p, xd_window)?;
    let hd = p.hidden;
    let mut features = vec![0.0; 2 * hd];
    if let Some(last) = orig.last() {
        features[..hd].copy_from_slice(last.h());
    }
    if let Some(last) = diff.last() {
        features[hd..].copy_from_slice(last.h());
    }

    let mut y = p.head_orig.bias.as_slice().to_vec();
    matvec_acc(&p.head_orig.weight, &features, &mut y);
    let mut yd = p.head_diff.bias.as_slice().to_vec();
    matvec_acc(&p.head_diff.weight, &features, &mut yd);
    if y.iter().chain(&yd).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("output head".into()));
    }

    Ok((
        Prediction {
            y: Vector::from_vec(y),
            yd: Vector::from_vec(yd),
        },
        Tape {
            orig,
            diff,
            x: x_window.to_vec(),
            xd: xd_window.to_vec(),
            features,
        },
    ))
}

fn sq_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Composite loss of one window:
/// `mean((y - target)²) + lambda · mean((yd - target_d)²)` over the horizon.
pub fn loss(pred: &Prediction, target_y: &[f64], target_yd: &[f64], lambda: f64) -> f64 {
    let h = pred.y.len() as f64;
    (sq_err(pred.y.as_slice(), target_y) + lambda * sq_err(pred.yd.as_slice(), target_yd)) / h
}

/// Loss split into its two streams, each normalised by `windows · H`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub original: f64,
    pub differential: f64,
    pub lambda: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.original + self.lambda * self.differential
    }
}

/// Gradient of the loss with respect to both heads' outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGrad {
    pub dy: Vec<f64>,
    pub dyd: Vec<f64>,
}

/// `∂L/∂y` and `∂L/∂yd` for one window whose squared errors are divided by
/// `norm` (the number of windows in the batch times `H`).
pub fn loss_grad(pred: &Prediction, target_y: &[f64], target_yd: &[f64], lambda: f64, norm: f64) -> LossGrad {
    let s = 2.0 / norm;
    LossGrad {
        dy: pred.y.as_slice().iter().zip(target_y).map(|(p, t)| s * (p - t)).collect(),
        dyd: pred
            .yd
            .as_slice()
            .iter()
            .zip(target_yd)
            .map(|(p, t)| s * lambda * (p - t))
            .collect(),
    }
}

/// Reverse-mode gradients of one window's loss contribution.
pub fn backward(p: &ModelParams, tape: &Tape, grad: &LossGrad) -> ParamGrads {
    let mut g = p.zeros_like();
    backward_into(p, tape, grad, &mut g);
    g
}

/// As [`backward`], accumulating into `grads`.
pub fn backward_into(p: &ModelParams, tape: &Tape, grad: &LossGrad, grads: &mut ParamGrads) {
    let hd = p.hidden;
    outer_acc(&mut grads.head_orig.weight, &grad.dy, &tape.features);
    outer_acc(&mut grads.head_diff.weight, &grad.dyd, &tape.features);
    for (b, d) in grads.head_orig.bias.as_mut_slice().iter_mut().zip(&grad.dy) {
        *b += d;
    }
    for (b, d) in grads.head_diff.bias.as_mut_slice().iter_mut().zip(&grad.dyd) {
        *b += d;
    }
    let mut dfeat = vec![0.0; 2 * hd];
    matvec_t_acc(&p.head_orig.weight, &grad.dy, &mut dfeat);
    matvec_t_acc(&p.head_diff.weight, &grad.dyd, &mut dfeat);
    // Both streams run through the same cell, so their contributions add up
    // in the shared gate gradients.
    backward_stream(p, &tape.orig, &tape.x, &dfeat[..hd], grads);
    backward_stream(p, &tape.diff, &tape.xd, &dfeat[hd..], grads);
}

fn check_dataset(p: &ModelParams, ds: &WindowedDataset) -> Result<()> {
    ds.validate()?;
    if ds.spec.horizon != p.horizon {
        return Err(Error::shape("dataset horizon", p.horizon, ds.spec.horizon));
    }
    if p.input_dim != 1 {
        return Err(Error::shape("model input dimension for scalar windows", 1, p.input_dim));
    }
    Ok(())
}

/// Loss over the rows `rows` of `ds` and its gradient, both normalised by
/// `rows.len() · H`.
pub fn batch_loss_and_grad(
    p: &ModelParams,
    ds: &WindowedDataset,
    rows: &[usize],
    lambda: f64,
) -> Result<(LossParts, ParamGrads)> {
    check_dataset(p, ds)?;
    let norm = (rows.len() * p.horizon) as f64;
    let mut grads = p.zeros_like();
    let mut parts = LossParts {
        lambda,
        ..Default::default()
    };
    for &r in rows {
        let (pred, tape) = forward(p, ds.x.row(r), ds.xd.row(r))?;
        parts.original += sq_err(pred.y.as_slice(), ds.y.row(r)) / norm;
        parts.differential += sq_err(pred.yd.as_slice(), ds.yd.row(r)) / norm;
        let g = loss_grad(&pred, ds.y.row(r), ds.yd.row(r), lambda, norm);
        backward_into(p, &tape, &g, &mut grads);
    }
    Ok((parts, grads))
}

/// Loss over every window of `ds`.
pub fn dataset_loss(p: &ModelParams, ds: &WindowedDataset, lambda: f64) -> Result<LossParts> {
    check_dataset(p, ds)?;
    let (yhat, ydhat) = predict(p, ds)?;
    let norm = (ds.len() * p.horizon) as f64;
    Ok(LossParts {
        original: sq_err(yhat.as_slice(), ds.y.as_slice()) / norm,
        differential: sq_err(ydhat.as_slice(), ds.yd.as_slice()) / norm,
        lambda,
    })
}

/// Predictions for every window: `(Ŷ, Ŷd)`, each `windows × H`.
pub fn predict(p: &ModelParams, ds: &WindowedDataset) -> Result<(Matrix, Matrix)> {
    check_dataset(p, ds)?;
    let n = ds.len();
    let mut y = Vec::with_capacity(n * p.horizon);
    let mut yd = Vec::with_capacity(n * p.horizon);
    for r in 0..n {
        let (pred, _) = forward(p, ds.x.row(r), ds.xd.row(r))?;
        y.extend_from_slice(pred.y.as_slice());
        yd.extend_from_slice(pred.yd.as_slice());
    }
    Ok((Matrix::from_vec(n, p.horizon, y)?, Matrix::from_vec(n, p.horizon, yd)?))
}
