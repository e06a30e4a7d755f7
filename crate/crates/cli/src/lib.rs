//! Library side of the `rws` command-line tool: config parsing, the
//! subcommands and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod selftest;

pub use commands::{cmd_analyze, cmd_kernel, cmd_synth, GlobalOptions};
pub use error::{CliError, CliResult};
