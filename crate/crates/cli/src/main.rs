//! `matfdp`: simulation campaigns, dataset analysis and synthetic data
//! generation for matrix-valued FDP estimation.

mod analyze;
mod args;
mod dataset;
mod error;
mod output;
mod simulate;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MATFDP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("MATFDP_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate::simulate(&a),
        Command::Analyze(a) => analyze::analyze(&a),
        Command::GenSynthetic(a) => simulate::gen_synthetic(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("matfdp: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("run `matfdp --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
