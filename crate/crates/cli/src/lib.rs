//! Command-line harness: generate synthetic data, fit, evaluate, or run the
//! full policy-gap sweep, writing CSV only.

pub mod config;
pub mod error;
pub mod experiment;
pub mod pipeline;

use std::path::PathBuf;

use clap::Parser;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Mode};
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, ExperimentReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "uplift",
    version,
    about = "Uplift estimation from separately labeled samples"
)]
pub struct Cli {
    /// TOML configuration file; every key is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// generate | fit | evaluate | experiment (overrides the config).
    #[arg(long)]
    pub mode: Option<String>,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Base seed mixed into every trial seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Loads the config file (or defaults) and applies flag overrides.
pub fn resolve_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = &cli.mode {
        cfg.mode = m.parse()?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = cli.seed {
        cfg.base_seed = s;
    }
    Ok(cfg)
}

/// Runs one invocation and maps the outcome to an exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match resolve_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let failures = match cfg.mode {
        Mode::Experiment => run_experiment(&cfg).map(|r| r.failures.len()),
        Mode::Generate => pipeline::run_generate(&cfg).map(|_| 0),
        Mode::Fit => pipeline::run_fit(&cfg),
        Mode::Evaluate => pipeline::run_evaluate(&cfg),
    };
    match failures {
        Ok(0) => EXIT_OK,
        Ok(n) => {
            eprintln!("warning: {n} trial(s) failed; see the log and failures.csv");
            EXIT_PARTIAL
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

pub fn run_main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    run(&Cli::parse())
}
