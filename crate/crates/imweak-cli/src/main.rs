//! `imweak` — run weak-measurement simulations from a JSON config and emit
//! machine-readable reports.

mod artifacts;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit codes, one per error class so scripted sweeps can triage failures.
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_NO_ACCEPT: u8 = 4;
pub const EXIT_ENGINE: u8 = 1;

#[derive(Parser)]
#[command(
    name = "imweak",
    version,
    about = "Weak-measurement simulation with imaginary weak values",
    after_help = "Exit codes: 0 success, 2 config error, 3 degenerate selection, \
                  4 zero-acceptance Monte Carlo, 1 other engine error.\n\
                  IMWEAK_THREADS caps engine concurrency."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json, CSV dumps and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Override the Monte-Carlo seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Monte-Carlo sample count from the config.
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the weak value of the configured observable and selection pair.
    Weakvalue(RunArgs),
    /// Bayes-update the coupling distribution under post-selection.
    Postselect(RunArgs),
    /// Stochastic realization of the post-selection with a seeded sampler.
    Montecarlo(RunArgs),
    /// Couple a Gaussian quantum meter and measure the pointer shifts.
    Meter(RunArgs),
    /// Run one of the named experiment presets.
    Scenario(RunArgs),
    /// Validate a config without executing: structural checks plus the
    /// weak-regime pre-flight.
    Validate {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    if let Ok(threads) = std::env::var("IMWEAK_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not apply IMWEAK_THREADS={n}: {e}");
                }
            }
            _ => eprintln!("warning: ignoring invalid IMWEAK_THREADS={threads}"),
        }
    }

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Weakvalue(args) => run::run_command("weakvalue", &args),
        Command::Postselect(args) => run::run_command("postselect", &args),
        Command::Montecarlo(args) => run::run_command("montecarlo", &args),
        Command::Meter(args) => run::run_command("meter", &args),
        Command::Scenario(args) => run::run_command("scenario", &args),
        Command::Validate { config } => run::validate_command(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
