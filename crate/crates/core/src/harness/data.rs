use serde::Serialize;

use crate::dynamics::{generate_lorenz, generate_mackey_glass, generate_rossler, Series};
use crate::error::{Error, Result};
use crate::preprocess::{
    build_windows, fit_scale_values, read_series_csv, read_two_column_csv, savitzky_golay_derivative, train_count,
    CsvOptions, ScaleParams, WindowedDataset,
};

use super::config::{DatasetSource, DiffMethod, ExperimentConfig, ScaleFit};

/// Everything a training run needs, shared read-only across runs.
#[derive(Clone, Debug, Serialize)]
pub struct PreparedData {
    /// Series in reporting units.
    pub values: Series,
    pub diffs: Series,
    pub value_scale: ScaleParams,
    pub diff_scale: ScaleParams,
    /// Scaled windows fed to the model.
    pub train: WindowedDataset,
    pub test: WindowedDataset,
    /// The same windows in reporting units, used for scoring.
    pub train_raw: WindowedDataset,
    pub test_raw: WindowedDataset,
}

/// Value and derivative series as configured, before normalisation.
pub fn load_series(cfg: &ExperimentConfig) -> Result<(Series, Series)> {
    let (values, analytic) = match &cfg.dataset {
        DatasetSource::MackeyGlass => {
            let (v, d) = generate_mackey_glass(&cfg.mackey_glass)?;
            (v, Some(d))
        }
        DatasetSource::Lorenz => {
            let (v, d) = generate_lorenz(&cfg.lorenz)?;
            (v, Some(d))
        }
        DatasetSource::Rossler => {
            let (v, d) = generate_rossler(&cfg.rossler)?;
            (v, Some(d))
        }
        DatasetSource::Csv(path) => match cfg.diff {
            DiffMethod::Analytic => {
                let (v, d) = read_two_column_csv(path, cfg.csv_dt).map_err(|e| match e {
                    Error::Corrupt(msg) => Error::Config(format!(
                        "diff = analytic needs a value,differential CSV; {msg}"
                    )),
                    other => other,
                })?;
                (v, Some(d))
            }
            DiffMethod::Savgol => {
                let opts = CsvOptions {
                    column: cfg.csv_column,
                    dt: cfg.csv_dt,
                    ..Default::default()
                };
                (read_series_csv(path, &opts)?, None)
            }
        },
    };
    let diffs = match (cfg.diff, analytic) {
        (DiffMethod::Analytic, Some(d)) => d,
        _ => savitzky_golay_derivative(&values, &cfg.savgol)?,
    };
    Ok((values, diffs))
}

/// Maps the values onto `[0, 1]` and divides the derivative by the same
/// range, so the pair stays consistent.
pub fn normalize_unit(values: &Series, diffs: &Series) -> Result<(Series, Series)> {
    let s = fit_scale_values(&values.values, 0.0, 1.0)?;
    let g = s.gain();
    let v = Series {
        values: s.scale_slice(&values.values),
        ..values.clone()
    };
    let d = Series {
        values: diffs.values.iter().map(|x| x * g).collect(),
        ..diffs.clone()
    };
    Ok((v, d))
}

/// Load, normalise, window, split and scale.
pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let (values, diffs) = load_series(cfg)?;
    let (values, diffs) = if cfg.normalize {
        normalize_unit(&values, &diffs)?
    } else {
        (values, diffs)
    };
    let spec = cfg.embedding();
    let raw = build_windows(&values, &diffs, &spec)?;
    let n_train = train_count(raw.len(), cfg.train_frac)?;

    let fit_end = match cfg.scale_fit {
        ScaleFit::Train => spec.last_index_of_window(n_train - 1) + 1,
        ScaleFit::Full => values.len(),
    };
    let value_scale = fit_scale_values(&values.values[..fit_end], cfg.scale_lo, cfg.scale_hi)?;
    let diff_scale = fit_scale_values(&diffs.values[..fit_end], cfg.scale_lo, cfg.scale_hi)?;
    let scaled_v = Series {
        values: value_scale.scale_slice(&values.values),
        ..values.clone()
    };
    let scaled_d = Series {
        values: diff_scale.scale_slice(&diffs.values),
        ..diffs.clone()
    };
    let scaled = build_windows(&scaled_v, &scaled_d, &spec)?;
    let n = raw.len();
    Ok(PreparedData {
        train: scaled.slice(0..n_train),
        test: scaled.slice(n_train..n),
        train_raw: raw.slice(0..n_train),
        test_raw: raw.slice(n_train..n),
        values,
        diffs,
        value_scale,
        diff_scale,
    })
}
