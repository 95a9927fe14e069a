//! Scenario-driven front end for the simulator: configuration parsing,
//! dispatch to the physics modules, and reproducible CSV/JSON artifacts.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod run;
pub mod table;
pub mod units;

pub use commands::Command;
pub use config::{parse_scenario, parse_scenario_str, Scenario};
pub use error::CliError;
pub use run::{run_scenario, RunManifest};
