//! Command-line front end: configuration, the `spectrum`, `flow`, `table1`,
//! `fixedpoint` and `sweep` commands, and their CSV/JSON output.

pub mod commands;
pub mod config;
pub mod output;
pub mod table1;

pub use commands::{cmd_fixedpoint, cmd_flow, cmd_spectrum, cmd_sweep, cmd_table1, Outcome, SweepGrid};
pub use config::{CommonArgs, OutputFormat, RunConfig};
