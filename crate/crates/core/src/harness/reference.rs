use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::report::RunReport;

pub const REFERENCE_FORMAT: &str = "difflstm-reference";
pub const REFERENCE_VERSION: u32 = 1;

/// A published value and how far above it a reproduction may land.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub mean: f64,
    /// Published confidence half-width, kept for display only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<f64>,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub format: String,
    pub version: u32,
    pub name: String,
    /// Keyed like the report metrics, e.g. `orig.test` or `diff.step_1`.
    pub metrics: BTreeMap<String, ReferenceEntry>,
}

impl ReferenceTable {
    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text).map_err(|e| Error::Corrupt(format!("reference table: {e}")))?;
        if t.format != REFERENCE_FORMAT {
            return Err(Error::Corrupt(format!("not a reference table (format {:?})", t.format)));
        }
        if t.version != REFERENCE_VERSION {
            return Err(Error::Version {
                found: t.version,
                supported: REFERENCE_VERSION,
            });
        }
        Ok(t)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub observed: f64,
    pub reference: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub table: String,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>10} {:>10} {:>10} {:>10}  verdict", "metric", "observed", "reference", "slack", "diff")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:>10.5} {:>10.5} {:>10.5} {:>+10.5}  {}",
                r.metric,
                r.observed,
                r.reference,
                r.slack,
                r.observed - r.reference,
                if r.pass { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// A metric passes when the report's mean is at most the reference mean
/// plus its slack. Keys missing from the report are an error listing all of
/// them.
pub fn compare_to_reference(report: &RunReport, table: &ReferenceTable) -> Result<Comparison> {
    let agg = report
        .aggregate
        .as_ref()
        .ok_or_else(|| Error::Numeric("no completed runs to compare".into()))?;
    let missing: Vec<String> = table.metrics.keys().filter(|k| agg.metric(k).is_none()).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::UnknownMetric(missing));
    }
    let rows = table
        .metrics
        .iter()
        .map(|(k, e)| {
            let observed = agg.metric(k).expect("checked above").mean;
            ComparisonRow {
                metric: k.clone(),
                observed,
                reference: e.mean,
                slack: e.slack,
                pass: observed <= e.mean + e.slack,
            }
        })
        .collect();
    Ok(Comparison {
        table: table.name.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{CiMethod, ExperimentConfig};
    use crate::harness::report::{AggregateReport, RunResult, StreamMetrics};
    use crate::numerics::Vector;

    fn report_with_test_mean(m: f64) -> RunReport {
        let s = StreamMetrics::from_steps(&Vector::from_vec(vec![m]), &Vector::from_vec(vec![m]));
        let runs = vec![RunResult {
            run: 0,
            seed: 0,
            orig: s.clone(),
            diff: s,
            final_train_loss: 0.0,
            loss_history: vec![],
            wall_time_s: None,
        }];
        RunReport {
            config: ExperimentConfig::default(),
            n_runs: 1,
            completed: 1,
            failed: vec![],
            aggregate: Some(AggregateReport::over(&runs, CiMethod::Normal).unwrap()),
            runs,
        }
    }

    fn table(keys: &[&str]) -> ReferenceTable {
        ReferenceTable {
            format: REFERENCE_FORMAT.into(),
            version: REFERENCE_VERSION,
            name: "t".into(),
            metrics: keys
                .iter()
                .map(|k| {
                    (
                        k.to_string(),
                        ReferenceEntry {
                            mean: 0.0464,
                            ci: Some(0.007),
                            slack: 0.015,
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn within_slack_passes() {
        let c = compare_to_reference(&report_with_test_mean(0.050), &table(&["orig.test"])).unwrap();
        assert!(c.passed());
        assert!(c.to_string().contains("PASS"));
    }

    #[test]
    fn beyond_slack_fails() {
        let c = compare_to_reference(&report_with_test_mean(0.070), &table(&["orig.test"])).unwrap();
        assert!(!c.passed());
        assert!(c.to_string().contains("FAIL"));
    }

    #[test]
    fn missing_rows_are_listed() {
        match compare_to_reference(&report_with_test_mean(0.05), &table(&["orig.test", "orig.step_7", "diff.step_9"])) {
            Err(Error::UnknownMetric(keys)) => assert_eq!(keys, vec!["diff.step_9", "orig.step_7"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_version_is_checked() {
        let mut t = table(&["orig.test"]);
        t.version = 9;
        let text = serde_json::to_string(&t).unwrap();
        assert!(matches!(ReferenceTable::from_json(&text), Err(Error::Version { .. })));
    }
}
