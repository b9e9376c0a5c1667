//! Experiment orchestration: configuration, seeded ensembles, pipelines,
//! and reports.

pub mod config;
pub mod ensemble;
pub mod output;
pub mod pipelines;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, SystemConfig};
pub use ensemble::ensemble_over_paths;
pub use pipelines::{calibrate_beta, run_experiment, Calibration};
pub use report::{ExperimentReport, SeedRecord, SCHEMA_VERSION};
