//! Command-line front end: argument definitions, command runner, random
//! family generator and the iteration benchmark.

pub mod args;
pub mod bench;
mod commands;
pub mod generate;

pub use args::Cli;
pub use commands::{execute, Outcome, SCHEMA_VERSION};
