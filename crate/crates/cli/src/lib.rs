//! Front end for the treerisk model: run configuration, command
//! implementations and CSV rendering. The `treerisk` binary is a thin wrapper
//! around [`commands::run`].

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{run, Command, Output};
pub use config::{ProfileSpec, RunConfig};
pub use error::CliError;
pub use table::{Field, Precision, Table};
