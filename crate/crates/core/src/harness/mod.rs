//! Scenario documents, report emission and the suite driver behind the CLI.

pub mod report;
pub mod run;
pub mod scenario;

use std::path::PathBuf;

pub use report::{emit_report, fmt17, report_json, report_table, to_json17};
pub use run::{run_scenario, run_scenario_text, run_suite, suite_files, Overrides, RunOutcome, Status};
pub use scenario::{prepare, resolve_metric, Backend, GridSpec, MetricSource, Operation, Outputs, Prepared, Scenario, Thresholds, SCENARIO_SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}
