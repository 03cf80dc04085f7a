//! Command-line front end and HTTP service for the analysis pipeline.

pub mod commands;
pub mod service;

pub use commands::{run, Cli, Command};

/// Exit codes shared by every subcommand.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VIOLATIONS: i32 = 1;
    pub const USAGE: i32 = 2;
}
