//! Pipeline stages behind the `fsfl` command line tool.

pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod pipeline;

pub use error::CliError;
