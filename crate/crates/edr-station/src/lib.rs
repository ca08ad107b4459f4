//! Scenario file ingestion, report emission, and the command
//! implementations behind the `edr-station` binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod timeseries;

pub use commands::{run_decide, run_sweep, run_validate, DecideArgs, SweepArgs, ValidateArgs};
pub use config::{load_scenario, save_scenario, ConfigError};
pub use timeseries::{load_window_csv, TimeseriesError};
