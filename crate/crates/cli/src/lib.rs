//! Front end of the `beatlaser` binary: configuration, artifact writers and
//! the subcommand runners.

pub mod commands;
pub mod config;
pub mod output;
