//! Command-line front end: CSV ingestion, fixtures and output writers.

pub mod args;
pub mod commands;
pub mod data;
pub mod error;

pub use error::{CliError, CliResult};

pub fn run(cli: args::Cli) -> CliResult<()> {
    match &cli.command {
        args::Command::Fit(a) => commands::fit(a),
        args::Command::Diagnose(a) => commands::diagnose(a),
        args::Command::Simulate(a) => commands::simulate(a),
        args::Command::Export(a) => commands::export(a),
    }
}
