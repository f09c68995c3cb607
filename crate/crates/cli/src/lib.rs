//! Experiment runner for the NB process topic models: fits a model on a
//! train/test split, writes traces, parameter dumps and a JSON report, and
//! wraps the self-checks and the synthetic corpus generator.

pub mod config;
pub mod error;
pub mod runner;
pub mod synth;
pub mod validate;

pub use config::{CorpusSource, RunConfig};
pub use error::CliError;
pub use runner::{fit_partition, run, PartitionFit, RunReport};

/// Commit the binary was built from, or `unknown`.
pub const COMMIT: &str = env!("NBPROC_COMMIT");
