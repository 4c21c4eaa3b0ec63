//! Command-line surface of the APNN simulator: `cv`, `trace`, `sweep` and
//! `cost`.

pub mod cli;
pub mod commands;
pub mod config;

pub use cli::{Cli, Command};
pub use config::RunConfig;
