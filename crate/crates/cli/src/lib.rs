//! IO, file formats, and the parallel batch engine behind the `crossview`
//! command-line tool.

pub mod batch;
pub mod commands;
pub mod config;
pub mod embfile;
pub mod error;
pub mod fsio;
pub mod manifest;

pub use error::{CliError, Result};
