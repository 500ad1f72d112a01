//! Command-line front end: data ingestion, campaign execution, index
//! computation, ranking and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod indices;
pub mod rank;
pub mod synth;

pub use error::{CliError, CliResult};
