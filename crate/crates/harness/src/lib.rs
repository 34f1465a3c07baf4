//! Batch front end for `fedpg-core`: TOML configuration, repeated runs and
//! sweeps written as CSV, and the validation suite.

pub mod config;
pub mod constants;
pub mod error;
pub mod experiment;
pub mod sweep;
pub mod validate;

pub use config::{ConfigError, ExperimentConfig};
pub use error::HarnessError;
