//! Batch experiments on top of `corr1d-core`: TOML run configs, figure
//! presets, a deterministic parallel runner, CSV/JSON output and result
//! comparison.

pub mod compare;
pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

use std::path::{Path, PathBuf};
use std::time::Instant;

use config::{ConfigError, RunConfig};
use output::{OutputError, RunInfo};
use runner::RunError;

/// Command-line overrides of a config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub threads: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("runtime failure: {0}")]
    Runtime(#[from] RunError),
    #[error("output error: {0}")]
    Output(#[from] OutputError),
    #[error(transparent)]
    Compare(#[from] compare::CompareError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
            Self::Output(_) | Self::Compare(_) => 1,
        }
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Loads, plans, runs and writes one experiment.
pub fn run(config_path: &Path, options: &RunOptions) -> Result<RunSummary, CliError> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(seed) = options.seed {
        cfg.seed = Some(seed);
    }
    if let Some(dir) = &options.output {
        cfg.output_dir = Some(dir.clone());
    }
    let threads = match options.threads {
        Some(0) => return Err(ConfigError::invalid("--threads", "must be at least 1").into()),
        Some(n) => n,
        None => default_threads(),
    };
    let plan = presets::plan(&cfg)?;
    let started = Instant::now();
    let out = runner::run_with_threads(&plan, threads)?;
    let info = RunInfo {
        config: &cfg,
        plan: &plan,
        threads,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let files = output::write_all(&plan.output_dir, &info, &out)?;
    Ok(RunSummary {
        output_dir: plan.output_dir,
        files,
        threads,
    })
}
