//! Configuration-driven experiment runner for `tvvi-core`.
//!
//! [`parse_config`] turns a key-value file into an [`ExperimentConfig`],
//! [`run_experiment`] produces a [`Table`] of result rows, and [`write_table`]
//! encodes it as CSV or JSON.

pub mod config;
mod error;
pub mod runner;
pub mod table;

pub use config::{parse_config, Command, ExperimentConfig};
pub use error::{ConfigErrors, FieldError, OutputError, RunError};
pub use runner::{emit, run_experiment, run_with_threads, Outcome, Status};
pub use table::{read_csv, write_csv, write_json, write_table, Format, Kind, Schema, Table, Value};
