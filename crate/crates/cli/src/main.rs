use std::process::ExitCode;

use chessboard_cli::args::Cli;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match chessboard_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("chessboard {}: {err}", cli.command.name());
            ExitCode::from(err.status() as u8)
        }
    }
}
