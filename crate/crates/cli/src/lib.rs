//! Configuration, dataset ingestion, output writing and subcommands behind
//! the `hsd` binary.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use bundle::{load_bundle, BundleSource, DatasetBundle, SyntheticSpec};
pub use config::{RawConfig, RunConfig};
pub use error::{BundleError, CliError, CliResult, ConfigError};
