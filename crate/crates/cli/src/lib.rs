//! Command-line front end for `ssrbell-core`.
//!
//! `ssrbell <command> [KEY=VALUE]...` runs one scenario and prints CSV or a
//! JSON report. Exit codes: 0 success, 1 usage error, 2 contract or
//! acceptance failure, 3 I/O error.

pub mod config;
pub mod error;
pub mod output;
pub mod reproduce;
pub mod run;
pub mod state_io;

pub use config::{Command, Format, Params, PhotonicMode, RunConfig};
pub use error::{CliError, CliResult};
pub use output::{Cell, Report};
pub use run::{execute, run, Outcome};
pub use state_io::{load_state, save_state, LoadedState};
