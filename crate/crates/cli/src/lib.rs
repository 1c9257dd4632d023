//! Configuration-driven front end: builds problems from a TOML run config,
//! solves them, runs experiment suites and writes reproducible artifacts.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_value, RunConfig, SuiteConfig};
pub use error::CliError;
pub use run::{cmd_solve, cmd_sweep, cmd_verify};
