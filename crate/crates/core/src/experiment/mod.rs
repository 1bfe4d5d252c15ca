//! Declarative experiments: config, builtin catalog, runner and reports.

mod catalog;
mod config;
mod report;
mod run;

pub use catalog::{find_scenario, ExpectedVerdict, ScenarioEntry, SCENARIOS};
pub use config::{AnalysisSpec, DensitySpec, ExperimentConfig, OperatorSpec, OutputSpec};
pub use report::{
    emit_report, recheck_verdicts, summary_json, svg_line_plot, Comparison, ComponentSummary, ExperimentReport,
    MeasureSummary, OrderSummary, OrliczSummary, PredictionSummary, ReportFormat, SensitivitySummary,
    SpectralSummary, Verdict, FAILED_MARKER, MEASURE_FILE, SCHEMA_VERSION, SPECTRUM_FILE, SUMMARY_FILE,
    TIMINGS_FILE,
};
pub use run::{run_experiment, StageFailure, SENSITIVITY_FLAG};
