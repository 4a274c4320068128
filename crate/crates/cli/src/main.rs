//! `gsicast`: operator entry point for capture, simulation, dataset
//! building and training. Machine-readable JSON goes to stdout, the human
//! summary and logs to stderr.

mod args;
mod commands;
mod error;
mod grid;

use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use crate::args::{Cli, Command};
use crate::error::EXIT_USAGE;

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Serve(a) => commands::serve(&cli, a),
        Command::EmitConfig(a) => commands::emit_config(&cli, a),
        Command::Simulate(a) => commands::simulate(&cli, a),
        Command::BuildDataset(a) => commands::build_dataset(&cli, a),
        Command::Train(a) => commands::train(&cli, a),
        Command::Report(a) => commands::report(&cli, a),
        Command::Forecast(a) => commands::forecast(&cli, a),
    };
    match result {
        Ok(out) => {
            if !out.is_empty() {
                println!("{out}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
