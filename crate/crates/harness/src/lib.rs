//! Config parsing, command dispatch and result persistence for the `sqg` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{dispatch, Command};
pub use config::{parse_config, parse_config_str, Resolved, RunConfig};
pub use error::{HarnessError, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
