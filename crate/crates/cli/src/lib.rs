//! Command-line driver: configuration, subcommands and run manifests.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 non-convergence, 4 failed statistical checks in `verify`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use config::{Mode, RunConfig};
use error::CliError;
use output::{sha256_hex, Manifest, Outputs};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub workers: usize,
    pub exploratory: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: String,
    pub out_dir: PathBuf,
}

/// Loads the config, runs `mode` (or `run.mode`), and writes `run.json`.
///
/// The manifest is written for every run that gets past configuration,
/// including runs that end in non-convergence or failed checks.
pub fn execute(mode: Option<Mode>, opts: &Options) -> Result<RunOutcome, CliError> {
    let text = std::fs::read(&opts.config).map_err(|source| config::ConfigError::Io {
        path: opts.config.display().to_string(),
        source,
    })?;
    let mut cfg = RunConfig::parse(&String::from_utf8_lossy(&text))?;
    if let Some(seed) = opts.seed {
        cfg.run.seed = seed;
        cfg.defaulted.retain(|k| k != "run.seed");
    }
    let mode = mode.unwrap_or(cfg.run.mode);
    cfg.run.mode = mode;
    let violations = cfg.hypothesis_violations(mode);
    if !violations.is_empty() && !opts.exploratory {
        return Err(CliError::Hypotheses(violations));
    }
    let out_dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let mut out = Outputs::create(&out_dir)?;
    let workers = opts.workers.max(1);

    let start = Instant::now();
    let result = match mode {
        Mode::Synth => commands::synth(&cfg, &mut out),
        Mode::Static => commands::static_solve(&cfg, &mut out),
        Mode::Time => commands::time_solve(&cfg, &mut out),
        Mode::Verify => commands::verify(&cfg, workers, &mut out),
        Mode::Sweep => commands::sweep(&cfg, workers, &mut out),
    };
    let (status, exit_code, message) = match &result {
        Ok(s) => ("ok", 0, Some(s.clone())),
        Err(e) => (
            match e.exit_code() {
                2 => "config_error",
                3 => "non_convergence",
                4 => "statistical_failure",
                _ => "error",
            },
            e.exit_code(),
            Some(e.to_string()),
        ),
    };
    let manifest = Manifest {
        command: mode.name(),
        version: VERSION,
        status,
        exit_code,
        message,
        config_path: Some(opts.config.display().to_string()),
        config_sha256: Some(sha256_hex(&text)),
        config: &cfg,
        seed: cfg.run.seed,
        workers,
        exploratory: opts.exploratory,
        hypothesis_violations: &violations,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs: out.files().to_vec(),
    };
    manifest.write(out.dir())?;
    let summary = result?;
    Ok(RunOutcome { summary, out_dir })
}
