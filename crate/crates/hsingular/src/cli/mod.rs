//! Configuration ingestion, run orchestration, and artifact emission.

pub mod artifacts;
mod checks;
mod config;
mod run;

pub use config::{parse_config, parse_config_str, ConfigError, FieldSpec, Mode, RunConfig};
pub use run::{build_instance, run, Instance, RunError};
