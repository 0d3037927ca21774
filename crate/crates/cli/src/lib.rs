//! Experiment driver: sweeps, variance studies, oracle validation,
//! field bisection and variance profiles, all writing CSV.

pub mod bisect;
pub mod config;
pub mod context;
pub mod error;
pub mod profile;
pub mod study;
pub mod sweep;
pub mod validate;

pub use config::Config;
pub use context::Context;
pub use error::{CliError, CliResult};
