use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Vector;

use super::config::{CiMethod, ExperimentConfig};
use super::metrics::{aggregate, pooled_rmse, summed_rmse, Aggregate};

/// Error summaries of one stream (values or derivatives) for one run, in
/// reporting units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamMetrics {
    /// `sqrt(Σ_k MSE_k)` over the training windows.
    pub train: f64,
    pub test: f64,
    /// RMSE pooled over all steps and windows.
    pub train_pooled: f64,
    pub test_pooled: f64,
    pub train_steps: Vec<f64>,
    pub test_steps: Vec<f64>,
}

impl StreamMetrics {
    pub fn from_steps(train_steps: &Vector, test_steps: &Vector) -> Self {
        Self {
            train: summed_rmse(train_steps),
            test: summed_rmse(test_steps),
            train_pooled: pooled_rmse(train_steps),
            test_pooled: pooled_rmse(test_steps),
            train_steps: train_steps.as_slice().to_vec(),
            test_steps: test_steps.as_slice().to_vec(),
        }
    }

    fn entries(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("train".to_string(), self.train),
            ("test".to_string(), self.test),
            ("train_pooled".to_string(), self.train_pooled),
            ("test_pooled".to_string(), self.test_pooled),
        ];
        for (k, v) in self.test_steps.iter().enumerate() {
            out.push((format!("step_{}", k + 1), *v));
        }
        for (k, v) in self.train_steps.iter().enumerate() {
            out.push((format!("train_step_{}", k + 1), *v));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub orig: StreamMetrics,
    pub diff: StreamMetrics,
    /// Composite loss of the last epoch, in scaled units.
    pub final_train_loss: f64,
    pub loss_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunResult {
    /// `(metric key, value)` pairs, e.g. `orig.test`, `diff.step_1`.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (stream, m) in [("orig", &self.orig), ("diff", &self.diff)] {
            out.extend(m.entries().into_iter().map(|(k, v)| (format!("{stream}.{k}"), v)));
        }
        out.push(("final_train_loss".into(), self.final_train_loss));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub cause: String,
    /// Divergence or non-finite values, as opposed to bad input.
    pub numeric: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamAggregate {
    pub train: Aggregate,
    pub test: Aggregate,
    pub train_pooled: Aggregate,
    pub test_pooled: Aggregate,
    pub train_steps: Vec<Aggregate>,
    pub test_steps: Vec<Aggregate>,
}

impl StreamAggregate {
    fn over(runs: &[&StreamMetrics], ci: CiMethod) -> Result<Self> {
        let col = |f: &dyn Fn(&StreamMetrics) -> f64| aggregate(&runs.iter().map(|m| f(m)).collect::<Vec<_>>(), ci);
        let h = runs[0].test_steps.len();
        Ok(Self {
            train: col(&|m| m.train)?,
            test: col(&|m| m.test)?,
            train_pooled: col(&|m| m.train_pooled)?,
            test_pooled: col(&|m| m.test_pooled)?,
            train_steps: (0..h).map(|k| col(&|m| m.train_steps[k])).collect::<Result<_>>()?,
            test_steps: (0..h).map(|k| col(&|m| m.test_steps[k])).collect::<Result<_>>()?,
        })
    }

    fn entries(&self) -> Vec<(String, &Aggregate)> {
        let mut out = vec![
            ("train".to_string(), &self.train),
            ("test".to_string(), &self.test),
            ("train_pooled".to_string(), &self.train_pooled),
            ("test_pooled".to_string(), &self.test_pooled),
        ];
        for (k, a) in self.test_steps.iter().enumerate() {
            out.push((format!("step_{}", k + 1), a));
        }
        for (k, a) in self.train_steps.iter().enumerate() {
            out.push((format!("train_step_{}", k + 1), a));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub orig: StreamAggregate,
    pub diff: StreamAggregate,
    pub final_train_loss: Aggregate,
}

impl AggregateReport {
    pub fn over(runs: &[RunResult], ci: CiMethod) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Parameter("no completed runs to aggregate".into()));
        }
        let orig: Vec<_> = runs.iter().map(|r| &r.orig).collect();
        let diff: Vec<_> = runs.iter().map(|r| &r.diff).collect();
        let losses: Vec<f64> = runs.iter().map(|r| r.final_train_loss).collect();
        Ok(Self {
            orig: StreamAggregate::over(&orig, ci)?,
            diff: StreamAggregate::over(&diff, ci)?,
            final_train_loss: aggregate(&losses, ci)?,
        })
    }

    /// Every metric with its key, in a fixed order.
    pub fn metrics(&self) -> Vec<(String, &Aggregate)> {
        let mut out = Vec::new();
        for (stream, a) in [("orig", &self.orig), ("diff", &self.diff)] {
            out.extend(a.entries().into_iter().map(|(k, v)| (format!("{stream}.{k}"), v)));
        }
        out.push(("final_train_loss".into(), &self.final_train_loss));
        out
    }

    pub fn metric(&self, key: &str) -> Option<&Aggregate> {
        self.metrics().into_iter().find(|(k, _)| k == key).map(|(_, a)| a)
    }
}

/// Per-run results plus their aggregate over completed runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub n_runs: usize,
    pub completed: usize,
    pub failed: Vec<RunFailure>,
    pub runs: Vec<RunResult>,
    /// `None` when no run completed.
    pub aggregate: Option<AggregateReport>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(format!("report: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Corrupt(format!("report: {e}")))
    }

    /// `run,seed,metric,value`, one row per run and metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,seed,metric,value\n");
        for r in &self.runs {
            for (k, v) in r.metrics() {
                let _ = writeln!(out, "{},{},{k},{v}", r.run, r.seed);
            }
        }
        out
    }

    /// Long format `series,step,mean,ci_lo,ci_hi` with one row per step for
    /// each of `orig_train`, `orig_test`, `diff_train`, `diff_test`.
    pub fn to_plot_csv(&self) -> String {
        let mut out = String::from("series,step,mean,ci_lo,ci_hi\n");
        if let Some(a) = &self.aggregate {
            for (name, steps) in [
                ("orig_train", &a.orig.train_steps),
                ("orig_test", &a.orig.test_steps),
                ("diff_train", &a.diff.train_steps),
                ("diff_test", &a.diff.test_steps),
            ] {
                for (k, s) in steps.iter().enumerate() {
                    let _ = writeln!(out, "{name},{},{},{},{}", k + 1, s.mean, s.ci_lo, s.ci_hi);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Plotcsv,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Plotcsv];

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "runs.csv",
            ReportFormat::Plotcsv => "plot.csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "plotcsv" => Ok(Self::Plotcsv),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }
}

/// Writes the requested formats into `dir` (created if missing) and returns
/// the paths written.
pub fn emit_reports(report: &RunReport, formats: &[ReportFormat], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for &f in formats {
        let path = dir.join(f.file_name());
        let body = match f {
            ReportFormat::Json => report.to_json()?,
            ReportFormat::Csv => report.to_csv(),
            ReportFormat::Plotcsv => report.to_plot_csv(),
        };
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
