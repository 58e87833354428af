//! Config files, CSV tables, and experiment drivers for `noma-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod tables;

pub use commands::{run, Cli, Status};
pub use config::load_config;
pub use error::CliError;
