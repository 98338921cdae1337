//! Command-line front end for `rgsla-core`: synthetic graph generation,
//! poisoning, training sweeps, homophily diagnostics and bound evaluation.
//!
//! Every subcommand takes its inputs as flags or from a TOML plan file
//! (`--plan`), whose section named after the subcommand supplies defaults
//! that flags override.

use clap::{Parser, Subcommand};

pub mod commands;
pub mod error;
pub mod output;
pub mod plan;

pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "rgsla", version, about = "Robust graph structure learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train plain GCN and/or RGSLA over attack rates and seeds; writes results.csv.
    Train(commands::train::TrainArgs),
    /// Poison a graph directory.
    Attack(commands::attack::AttackArgs),
    /// Per-node homophily ratios for a raw and optionally a learned adjacency.
    Homophily(commands::homophily::HomophilyArgs),
    /// Evaluate the Rademacher lower bound and TRC upper bound.
    Bound(commands::bound::BoundArgs),
    /// Generate a synthetic SBM graph directory.
    Gen(commands::gen::GenArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => commands::train::run(a),
        Command::Attack(a) => commands::attack::run(a),
        Command::Homophily(a) => commands::homophily::run(a),
        Command::Bound(a) => commands::bound::run(a),
        Command::Gen(a) => commands::gen::run(a),
    }
}
