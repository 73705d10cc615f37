//! `vicsek`: runs one experiment from a TOML config and writes CSV tables plus
//! a `manifest.toml` into the output directory.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::parse_config;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "vicsek", version, about = "Particle and kinetic Vicsek experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Well-posedness constants of the initial density.
    Constants,
    /// Interacting particle system.
    Particles,
    /// Nonlinear kinetic solve with conservation, floor and Lᵖ checks.
    Kinetic,
    /// Free energy and dissipation along a kinetic solve.
    Energy,
    /// One coupled particle / auxiliary replica.
    Coupling,
    /// Propagation-of-chaos sweep over particle counts.
    Sweep,
    /// Empirical probability that the particle flux stays above a threshold.
    Fluxprob,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::schema("--config", "a configuration file is required"))?;
    let cfg = parse_config(&path)?.resolve(cli.seed, cli.out)?;
    let dir = cfg
        .out
        .clone()
        .ok_or_else(|| CliError::schema("out", "give an output directory with --out or `out`"))?;
    std::fs::create_dir_all(&dir)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::schema("--threads", "must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::schema("--threads", e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Constants => run::constants(&cfg, &dir),
        Command::Particles => run::particles(&cfg, &dir),
        Command::Kinetic => run::kinetic(&cfg, &dir),
        Command::Energy => run::energy(&cfg, &dir),
        Command::Coupling => run::coupling(&cfg, &dir),
        Command::Sweep => run::sweep(&cfg, &dir),
        Command::Fluxprob => run::fluxprob(&cfg, &dir),
    })
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
