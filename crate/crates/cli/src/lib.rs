//! Command-line pipeline around `nprox-core`: config, stage cache, reports.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod persist;
pub mod pipeline;
pub mod report;

pub use error::CliError;
