//! Command-line experiment runner: configuration, result files and figures.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plots;
pub mod store;
pub mod svg;

pub use error::{CliError, Result};
