//! Library side of the `g2flow` binary: argument definitions, JSON
//! configuration, versioned CSV output and the four subcommands.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use args::{Cli, Command, Common};
pub use error::{CliError, ExitCode};
