//! Python bindings for difflstm.
//!
//! Arrays cross the boundary as lists of floats. Structured results (reports,
//! gradient checks, comparisons) come back as JSON strings.

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use difflstm::dynamics::{
    generate_lorenz, generate_mackey_glass, generate_rossler, LorenzParams, MackeyGlassParams, RosslerParams, Series,
};
use difflstm::harness::{compare_to_reference, run_experiment as run_core, ExperimentConfig, ReferenceTable, RunReport};
use difflstm::network::{gradcheck as gradcheck_core, param_count_for, GradcheckConfig};
use difflstm::preprocess::{false_nearest_neighbors, savitzky_golay_derivative, FnnConfig, SavGolSpec};
use difflstm::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        e if e.is_numeric() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Values and analytic derivative of a chaotic system sampled with default
/// parameters. `system` is one of `mackey_glass`, `lorenz`, `rossler`.
#[pyfunction]
#[pyo3(signature = (system, n_samples=None))]
fn generate(system: &str, n_samples: Option<usize>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let (v, d) = match system.replace('-', "_").as_str() {
        "mackey_glass" => {
            let mut p = MackeyGlassParams::default();
            if let Some(n) = n_samples {
                p.n_samples = n;
            }
            generate_mackey_glass(&p)
        }
        "lorenz" => {
            let mut p = LorenzParams::default();
            if let Some(n) = n_samples {
                p.n_samples = n;
            }
            generate_lorenz(&p)
        }
        "rossler" => {
            let mut p = RosslerParams::default();
            if let Some(n) = n_samples {
                p.n_samples = n;
            }
            generate_rossler(&p)
        }
        other => return Err(PyValueError::new_err(format!("unknown system {other:?}"))),
    }
    .map_err(py_err)?;
    Ok((v.values, d.values))
}

/// Parameter counts as `(cell, head_orig, head_diff, total)`.
#[pyfunction]
#[pyo3(signature = (hidden=10, horizon=10, input_dim=1))]
fn param_count(hidden: usize, horizon: usize, input_dim: usize) -> (usize, usize, usize, usize) {
    let c = param_count_for(hidden, input_dim, horizon);
    (c.cell, c.head_orig, c.head_diff, c.total())
}

#[pyfunction]
#[pyo3(signature = (values, dt, window=5, polyorder=3))]
fn savgol_derivative(values: Vec<f64>, dt: f64, window: usize, polyorder: usize) -> PyResult<Vec<f64>> {
    let s = Series::new("x", values, dt).map_err(py_err)?;
    let spec = SavGolSpec {
        window,
        polyorder,
        dt: None,
    };
    Ok(savitzky_golay_derivative(&s, &spec).map_err(py_err)?.values)
}

/// Embedding dimension chosen by false nearest neighbours.
#[pyfunction]
#[pyo3(signature = (values, d_max=10, lag=1, threshold=0.01))]
fn fnn(values: Vec<f64>, d_max: usize, lag: usize, threshold: f64) -> PyResult<usize> {
    let s = Series::new("x", values, 1.0).map_err(py_err)?;
    let cfg = FnnConfig {
        d_max,
        lag,
        threshold,
        ..Default::default()
    };
    Ok(false_nearest_neighbors(&s, &cfg).map_err(py_err)?.dimension)
}

/// Finite-difference check of the analytic gradients, as JSON.
#[pyfunction]
#[pyo3(signature = (seed=7, draws=50))]
fn gradcheck(seed: u64, draws: usize) -> PyResult<String> {
    let cfg = GradcheckConfig {
        seed,
        draws,
        ..Default::default()
    };
    to_json(&gradcheck_core(&cfg).map_err(py_err)?)
}

/// Runs an experiment described by a JSON config and returns the report JSON.
/// Releases the GIL while training.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let report = py.detach(|| run_core(&cfg)).map_err(py_err)?;
    report.to_json().map_err(py_err)
}

/// Compares a report against a reference table; returns `(passed, table)`.
#[pyfunction]
fn compare(report_json: &str, table_json: &str) -> PyResult<(bool, String)> {
    let report = RunReport::from_json(report_json).map_err(py_err)?;
    let table = ReferenceTable::from_json(table_json).map_err(py_err)?;
    let c = compare_to_reference(&report, &table).map_err(py_err)?;
    Ok((c.passed(), c.to_string()))
}

#[pymodule]
fn difflstm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(param_count, m)?)?;
    m.add_function(wrap_pyfunction!(savgol_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(fnn, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
