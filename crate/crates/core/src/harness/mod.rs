//! Experiment orchestration and reporting: bootstrap replicates over
//! centralized, single-party, and collaborative arms; metric
//! aggregation; CSV/JSON emission. Hosts the CLI's engine.

mod config;
mod experiment;
mod report;
mod selftest;

pub use config::{DataSource, ExperimentConfig, ReducerMethod, ReducerSpec};
pub use experiment::{
    fit_reducer_for_export, load_population, run_arm, run_experiment, summarize, ArmResult,
    ArmSettings, ArmSpec, SUMMARY_METRICS,
};
pub use report::{
    ArmOutcome, ArmRecord, ArmTag, ExperimentReport, Provenance, ReplicateRecord, SummaryRow,
    SummaryTable,
};
pub use selftest::{run_selftest, CheckOutcome};
