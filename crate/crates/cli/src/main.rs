use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bhtlab_cli::config::Mode;
use bhtlab_cli::{execute, Options};

#[derive(Parser)]
#[command(name = "bhtlab", version, about = "Spectral Monte Carlo laboratory for passive-tracer spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (sectioned key = value text).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for ensembles; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Run even when theorem hypotheses are violated (recorded in run.json).
    #[arg(long, global = true)]
    exploratory: bool,

    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write one velocity and source realization.
    Synth,
    /// Solve the stationary problem by fixed-point iteration.
    Static,
    /// Integrate along a time-correlated velocity path.
    Time,
    /// Monte Carlo ensemble and spectrum report with 4σ checks.
    Verify,
    /// Ensembles over amplitude scales with remainder fits.
    Sweep,
    /// Use `run.mode` from the configuration.
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(2);
    };
    let mode = match cli.command {
        Command::Synth => Some(Mode::Synth),
        Command::Static => Some(Mode::Static),
        Command::Time => Some(Mode::Time),
        Command::Verify => Some(Mode::Verify),
        Command::Sweep => Some(Mode::Sweep),
        Command::Run => None,
    };
    let opts = Options { config, seed: cli.seed, workers: cli.workers, exploratory: cli.exploratory, out: cli.out };
    match execute(mode, &opts) {
        Ok(outcome) => {
            println!("{} (outputs in {})", outcome.summary, outcome.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
