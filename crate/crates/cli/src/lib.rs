//! Command-line front end: experiment presets, config resolution and output files.

pub mod config;
pub mod experiment;
pub mod preset;

pub use config::{Cli, Command, ConfigError, ExperimentConfig, RunArgs};
pub use experiment::{run_bulk_surface, run_heat, Outcome, RunError};
pub use preset::Experiment;

/// Resolves `args` and runs the experiment.
pub fn execute(args: &RunArgs, sweep: bool) -> Result<Outcome, RunError> {
    let config = ExperimentConfig::resolve(args, sweep)?;
    if config.experiment.is_heat() {
        run_heat(&config, sweep)
    } else {
        run_bulk_surface(&config)
    }
}
