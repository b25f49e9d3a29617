//! Command-line driver for the primitive-equations laboratory.
//!
//! Exit codes: 0 on success, 2 on any fault, 3 when a Picard iteration does
//! not contract or a step is unstable.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cpe_core::CpeError;

#[derive(Parser, Debug)]
#[command(name = "cpe", version, about = "Pseudo-spectral laboratory for the compressible primitive equations")]
struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for CSV tables and snapshots.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Only errors are printed.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the system and record the energy monitor.
    Run,
    /// Manufactured-solution convergence study.
    Mms,
    /// Distance to the unregularized run for each epsilon.
    EpsSweep,
    /// Response to seeded perturbations of the initial data.
    Perturb,
    /// Picard iteration with contraction monitoring.
    Picard,
    /// Sample product and commutator estimates on random fields.
    IneqLab,
    /// Print the header of a snapshot file.
    Inspect {
        /// Snapshot to read.
        path: PathBuf,
    },
}

/// Sizes the worker pool from `CPE_THREADS` (0 or unset = one per core).
fn configure_threads() -> Result<(), CpeError> {
    let n = match std::env::var("CPE_THREADS") {
        Err(_) => 0,
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CpeError::UsageFault(format!("CPE_THREADS must be a non-negative integer, got `{v}`")))?,
    };
    #[cfg(feature = "parallel")]
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CpeError::UsageFault(format!("cannot size the thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), CpeError> {
    configure_threads()?;
    let ctx = commands::Context::new(cli.config.as_deref(), &cli.out, cli.seed, cli.quiet);
    match &cli.command {
        Command::Run => commands::run(&ctx?),
        Command::Mms => commands::mms(&ctx?),
        Command::EpsSweep => commands::eps_sweep(&ctx?),
        Command::Perturb => commands::perturb(&ctx?),
        Command::Picard => commands::picard(&ctx?),
        Command::IneqLab => commands::ineq_lab(&ctx?),
        Command::Inspect { path } => commands::inspect(path, cli.quiet),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
