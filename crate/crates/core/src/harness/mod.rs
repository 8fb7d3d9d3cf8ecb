mod config;
mod data;
mod experiment;
mod metrics;
mod reference;
mod report;

pub use config::{CiMethod, DatasetSource, DiffMethod, ExperimentConfig, ScaleFit};
pub use data::{load_series, normalize_unit, prepare, PreparedData};
pub use experiment::{fit_run, lambda_sweep, run_experiment, run_once, run_prepared};
pub use metrics::{aggregate, pooled_rmse, rmse_per_step, summed_rmse, Aggregate};
pub use reference::{
    compare_to_reference, Comparison, ComparisonRow, ReferenceEntry, ReferenceTable, REFERENCE_FORMAT,
    REFERENCE_VERSION,
};
pub use report::{
    emit_reports, AggregateReport, ReportFormat, RunFailure, RunReport, RunResult, StreamAggregate, StreamMetrics,
};
