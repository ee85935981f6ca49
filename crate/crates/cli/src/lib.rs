//! Command-line front end: flat config files, CSV grids and JSON sidecars
//! around the algorithms in `chessboard-core`.

pub mod args;
pub mod commands;
mod error;
pub mod gridio;
pub mod settings;

pub use error::{CliError, CliResult, ExitStatus};

use args::Cli;
use settings::Settings;

/// Resolves settings for the parsed command line and runs it.
pub fn run(cli: &Cli) -> CliResult<()> {
    let options = cli.command.options();
    let settings = Settings::load(options.config.as_deref(), options.overrides())?;
    commands::run(&cli.command, &settings)
}
