//! Command-line front end: argument parsing, configuration resolution,
//! persisted artifacts and the fit/predict/cross-validation workflows.

pub mod args;
pub mod artifacts;
pub mod commands;
pub mod error;
pub mod evaluate;
pub mod settings;

pub use error::{CliError, CliResult};

use args::{Cli, Command};

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a),
        Command::Predict(a) => commands::cmd_predict(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Crossval(a) => commands::cmd_crossval(a),
    }
}
