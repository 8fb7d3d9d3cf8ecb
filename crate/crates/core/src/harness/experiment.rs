use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{predict, train, ModelParams};
use crate::numerics::{Matrix, Vector};
use crate::preprocess::{ScaleParams, WindowedDataset};

use super::config::ExperimentConfig;
use super::data::{prepare, PreparedData};
use super::metrics::rmse_per_step;
use super::report::{AggregateReport, RunFailure, RunReport, RunResult, StreamMetrics};

fn unscale_matrix(m: &Matrix, s: &ScaleParams) -> Matrix {
    Matrix::from_vec(m.rows(), m.cols(), s.unscale_slice(m.as_slice())).expect("same shape")
}

/// Per-step errors of both streams on one partition, after undoing the
/// model-side scaling.
fn score(
    params: &ModelParams,
    scaled: &WindowedDataset,
    raw: &WindowedDataset,
    data: &PreparedData,
) -> Result<(Vector, Vector)> {
    let (y, yd) = predict(params, scaled)?;
    let y = unscale_matrix(&y, &data.value_scale);
    let yd = unscale_matrix(&yd, &data.diff_scale);
    Ok((rmse_per_step(&y, &raw.y)?, rmse_per_step(&yd, &raw.yd)?))
}

/// Trains and scores run `run` of `cfg` on prepared data.
pub fn run_once(cfg: &ExperimentConfig, data: &PreparedData, run: usize) -> Result<RunResult> {
    fit_run(cfg, data, run).map(|(_, r)| r)
}

/// As [`run_once`], also returning the trained parameters.
pub fn fit_run(cfg: &ExperimentConfig, data: &PreparedData, run: usize) -> Result<(ModelParams, RunResult)> {
    let start = Instant::now();
    let tc = cfg.train_config(run);
    let out = train(&data.train, &tc)?;
    let (tr_y, tr_yd) = score(&out.params, &data.train, &data.train_raw, data)?;
    let (te_y, te_yd) = score(&out.params, &data.test, &data.test_raw, data)?;
    let result = RunResult {
        run,
        seed: tc.seed,
        orig: StreamMetrics::from_steps(&tr_y, &te_y),
        diff: StreamMetrics::from_steps(&tr_yd, &te_yd),
        final_train_loss: out.loss_history.last().copied().unwrap_or(f64::NAN),
        loss_history: out.loss_history.clone(),
        wall_time_s: cfg.record_timing.then(|| start.elapsed().as_secs_f64()),
    };
    let finite = result.metrics().iter().all(|(k, v)| v.is_finite() || k == "final_train_loss");
    if !finite {
        return Err(Error::Numeric(format!("metrics of run {run}")));
    }
    Ok((out.params, result))
}

/// Runs every seed of `cfg` on already prepared data. Runs execute in
/// parallel; results come back in run order.
pub fn run_prepared(cfg: &ExperimentConfig, data: &PreparedData) -> Result<RunReport> {
    let outcomes: Vec<Result<RunResult>> = (0..cfg.n_runs).into_par_iter().map(|i| run_once(cfg, data, i)).collect();
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => runs.push(r),
            Err(e) => {
                log::warn!("run {i} failed: {e}");
                failed.push(RunFailure {
                    run: i,
                    seed: cfg.run_seed(i),
                    numeric: e.is_numeric(),
                    cause: e.to_string(),
                });
            }
        }
    }
    let aggregate = if runs.is_empty() {
        None
    } else {
        Some(AggregateReport::over(&runs, cfg.ci)?)
    };
    Ok(RunReport {
        config: cfg.clone(),
        n_runs: cfg.n_runs,
        completed: runs.len(),
        failed,
        runs,
        aggregate,
    })
}

/// Full pipeline: data preparation, then `n_runs` seeded trainings.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let data = prepare(cfg)?;
    run_prepared(cfg, &data)
}

/// One experiment per `lambda`, sharing the prepared data.
pub fn lambda_sweep(cfg: &ExperimentConfig, lambdas: &[f64]) -> Result<Vec<(f64, RunReport)>> {
    cfg.validate()?;
    let data = prepare(cfg)?;
    lambdas
        .iter()
        .map(|&l| {
            let c = ExperimentConfig {
                lambda: l,
                ..cfg.clone()
            };
            c.validate()?;
            Ok((l, run_prepared(&c, &data)?))
        })
        .collect()
}
