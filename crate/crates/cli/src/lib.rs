//! Configuration-driven batch driver for `sector_core`.

pub mod config;
pub mod error;
pub mod presets;
pub mod scenario;

pub use config::{parse_config, Overrides, RunConfig, Scenario, SolverChoice};
pub use error::CliError;
pub use scenario::{run_scenario, RunOutcome};
