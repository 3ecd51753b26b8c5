//! Experiment harness around `cil-core`: configuration, training runs,
//! ablations, report aggregation and classifier dumps.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod model_dump;
pub mod report;

pub use config::{DatasetSource, RunConfig, SeedStreams, OUTPUT_DIR_ENV};
pub use error::{CliError, CliResult};
pub use experiment::{ablation_table, cmd_ablate, cmd_train, run_seed, AblationTable, SeedRun, Variant};
