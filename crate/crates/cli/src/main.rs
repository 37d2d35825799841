//! `mupir`: capacity tables, protocol runs, attacks and privacy checks.
//!
//! Exit status 0 means every check passed, 1 means a check failed, 2 means
//! the invocation or its inputs were invalid.

mod commands;
mod config;
mod grid;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{attack, capacity, privacy, run, sweep};

#[derive(Parser)]
#[command(name = "mupir", version, about = "Multi-user private information retrieval laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate capacity, block length and download cost over a grid.
    Capacity(capacity::Args),
    /// Run one retrieval end to end and write its transcript.
    Run(run::Args),
    /// Run an index-inference attack on a transcript.
    Attack(attack::Args),
    /// Check that per-source query distributions do not depend on theta.
    Privacy(privacy::Args),
    /// Measure how the cross-user attack's cost grows.
    Sweep(sweep::Args),
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Passed,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Capacity(a) => capacity::execute(a),
        Command::Run(a) => run::execute(a),
        Command::Attack(a) => attack::execute(a),
        Command::Privacy(a) => privacy::execute(a),
        Command::Sweep(a) => sweep::execute(a),
    };
    match result {
        Ok(Status::Passed) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
