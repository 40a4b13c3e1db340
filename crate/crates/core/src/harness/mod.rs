//! Configuration, experiment orchestration and reports.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{ExperimentConfig, OutputFormat, ReferenceKind, Study};
pub use experiment::{errors_against, run_experiment, run_experiment_detailed, ExperimentOutcome, LevelErrors, ReferenceSolution};
pub use report::{compute_rates, emit_report, ErrorReport, ReportRow, CSV_HEADER};
