//! Scenario-driven runs of the probe time-reversal simulator.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use commands::{cmd_compare, cmd_greens, cmd_run, compare_reports, render_run, Tolerances};
pub use error::CliError;
pub use report::Report;
pub use scenario::{open, Overrides, ProtocolChoice, Scenario};
