//! `levelup`: fit a scorer, enforce per-group thresholds, sweep frontiers and
//! audit who gains or loses.
//!
//! Exit codes: 0 success (including when levelling down is reported),
//! 2 usage error, 3 data error, 4 infeasible constraint.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "levelup", version, about = "Per-group threshold fairness post-processing")]
struct Cli {
    /// Flat JSON config; command-line flags override its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the logistic scorer and write scores for every split
    Train(RunConfig),
    /// Enforce a constraint and write the policy plus a before/after report
    Enforce(RunConfig),
    /// Sweep an equality or minimum-rate frontier
    Frontier(RunConfig),
    /// Report a saved policy against the unconstrained one
    Audit(RunConfig),
    /// Write a synthetic population
    Synth(RunConfig),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, flags) = match cli.command {
        Command::Train(c) => ("train", c),
        Command::Enforce(c) => ("enforce", c),
        Command::Frontier(c) => ("frontier", c),
        Command::Audit(c) => ("audit", c),
        Command::Synth(c) => ("synth", c),
    };
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let config = file.overlay(flags).resolve()?;
    log::info!("{name}: config {}", config.hash());
    match name {
        "train" => commands::train(&config),
        "enforce" => commands::enforce_cmd(&config),
        "frontier" => commands::frontier(&config),
        "audit" => commands::audit(&config),
        _ => commands::synth(&config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
