//! Experiment runner: `equilibrium`, `sample`, `verify`, `analyze` and
//! `report` subcommands driven by a TOML config.

pub mod commands;
pub mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "ocp", version, about = "Two-dimensional Coulomb gas experiments")]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the equilibrium measure on the configured grid.
    Equilibrium,
    /// Run Metropolis chains over the configured (N, β) grid.
    Sample,
    /// Run the identity suite.
    Verify,
    /// Local-law, loop-equation and rigidity reports for sample batches.
    Analyze {
        /// Batch files (`.json`, `.bin` or their common stem); defaults to
        /// every batch listed in the output directory's sample summary.
        batches: Vec<PathBuf>,
    },
    /// Collect the JSON summaries in the output directory into report.md.
    Report,
}

/// Resolved command context.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::parse("")?,
    };
    if let Some(s) = cli.seed {
        config.seed = Some(s);
    }
    let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    if let Some(t) = cli.threads {
        // a second initialization (e.g. repeated in-process runs) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let ctx = RunContext { config, out };
    output::log(&ctx.out, &format!("{:?}", cli.command));
    match cli.command {
        Command::Equilibrium => commands::equilibrium::run(&ctx),
        Command::Sample => commands::sample::run(&ctx),
        Command::Verify => commands::verify::run(&ctx),
        Command::Analyze { batches } => commands::analyze::run(&ctx, &batches),
        Command::Report => commands::report::run(&ctx),
    }
}
