//! Experiment runner: adaptive-stepsize Trotterization benchmarks driven by
//! declarative JSON configs, with trace, bound, scaling, sweep, and
//! extrapolation outputs.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "trotter24",
    version,
    about = "Adaptive-stepsize Trotterization experiments"
)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for traces and tables.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides the config seed (iterative-norm start vectors).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parameter sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Force dense-oracle verification where the size permits.
    #[arg(long, global = true)]
    dense_oracle: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive controller and persist the trace.
    Run,
    /// Tabulate nested-commutator norms and the a priori stepsize bound.
    Bounds,
    /// Tabulate one-step errors and estimators over a stepsize grid.
    Scaling,
    /// Compare the adaptive run against fixed-step extrapolation.
    CompareExtrapolation,
    /// Sweep the safety constant and aggregate stepsize/rejection stats.
    SweepC,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing thread pool")?;
    }

    let Some(config_path) = &cli.config else {
        bail!("--config <path> is required");
    };
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.dense_oracle |= cli.dense_oracle;

    match cli.command {
        Command::Run => commands::cmd_run(&cfg, &cli.out),
        Command::Bounds => commands::cmd_bounds(&cfg, &cli.out),
        Command::Scaling => commands::cmd_scaling(&cfg, &cli.out),
        Command::CompareExtrapolation => commands::cmd_compare_extrapolation(&cfg, &cli.out),
        Command::SweepC => commands::cmd_sweep_c(&cfg, &cli.out),
    }
}
