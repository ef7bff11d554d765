//! Batch driver for the Monge–Ampère laboratory: configuration files, run
//! manifests, instance pipelines and ensemble summaries.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;
pub mod summary;

pub use config::{parse_ks, plan, ExperimentConfig, Instance, Overrides, Plan, SampleCounts, STAGE_ORDER};
pub use error::CliError;
pub use manifest::{sha256_hex, OutputDigest, RunManifest, StageTime};
pub use run::{load_solution, restrict, row_stage, run, solution_json, solve_instance, verify, violation};
pub use summary::{load_reports, summarize, Spread, Summary, VerdictCount};
