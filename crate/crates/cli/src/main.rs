mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};

/// Covariant Dirac operators on the quantum disk: hypothesis checks, kernel
/// counts, the spectral-triple battery and spectral sweeps.
#[derive(Parser)]
#[command(name = "qdisk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Named power-law family: default (4,3,5.5), kernel-1 (4,3,9) or kernel-2 (4,3,10).
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Truncation size.
    #[arg(long = "K", global = true)]
    size: Option<usize>,

    /// Mode window MIN..MAX (inclusive).
    #[arg(long, global = true, allow_hyphen_values = true)]
    modes: Option<String>,

    /// Identity, covariance and parametrix tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Output directory for reports and CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the hypotheses and report N.
    Check,
    /// Kernel membership per mode and the kernel dimension.
    Kernel,
    /// Run the full verification battery and write report.json.
    Verify,
    /// Write HS-norm, singular-value, kernel and commutator series as CSV.
    Spectrum,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let over = Overrides {
        preset: cli.preset,
        size: cli.size,
        modes: cli.modes,
        tol: cli.tol,
        out: cli.out,
        seed: cli.seed,
    };
    let cfg = match RunConfig::load(cli.config.as_deref(), &over) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Check => commands::check(&cfg),
        Command::Kernel => commands::kernel(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Spectrum => commands::spectrum(&cfg),
    };
    match result {
        Ok(outcome) => {
            if let Err(e) = commands::emit(&outcome) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if let Some(f) = &outcome.failure {
                eprintln!("failed: {f}");
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
