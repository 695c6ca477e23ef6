//! Configuration-driven front end: `sample`, `phase-sweep`, `benchmark`,
//! `collapse` and `unravel-optimize`.
//!
//! Every command writes into one output directory. CSV files start with a
//! `# schema: nsebd/<name>/v<k>` line followed by a header row.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::channels::{ChannelError, NoiseKind};
use crate::lightcone::LightconeError;
use crate::oracles::OracleError;
use crate::sampler::SamplerError;

pub mod commands;
pub mod config;

pub use config::{ExperimentConfig, Instance, OracleKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Lightcone(#[from] LightconeError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "nsebd", version, about = "Noisy 2D random circuit sampling with MPS trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment TOML file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Replaces `sweep.master_seed`.
    #[arg(long, global = true)]
    pub seed_override: Option<u64>,
    /// Replaces the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bitstrings and telemetry for every sweep point.
    Sample,
    /// Purification time of a reference qubit versus noise rate and width.
    PhaseSweep,
    /// Sampler probability estimates against reference simulators.
    Benchmark,
    /// Finite-size scaling collapse of a `tau.csv` table.
    Collapse {
        /// Defaults to `<out>/tau.csv`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Entanglement-optimal unraveling of a noise channel.
    UnravelOptimize {
        /// dephasing, depolarizing, amplitude-damping or unital-general;
        /// read from the config when omitted.
        #[arg(long, value_parser = parse_noise_kind)]
        noise: Option<NoiseKind>,
        /// Comma-separated noise rates.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
}

fn parse_noise_kind(s: &str) -> Result<NoiseKind, String> {
    match s {
        "dephasing" => Ok(NoiseKind::Dephasing),
        "depolarizing" => Ok(NoiseKind::Depolarizing),
        "amplitude-damping" => Ok(NoiseKind::AmplitudeDamping),
        "unital-general" => Ok(NoiseKind::UnitalGeneral),
        other => Err(format!("unknown noise kind '{other}'")),
    }
}

impl Cli {
    fn load_config(&self) -> CliResult<Option<ExperimentConfig>> {
        let Some(path) = &self.config else { return Ok(None) };
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = self.seed_override {
            cfg.sweep.master_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        Ok(Some(cfg))
    }

    fn require_config(&self) -> CliResult<ExperimentConfig> {
        self.load_config()?.ok_or_else(|| CliError::Usage("this command needs --config".into()))
    }

    fn dispatch(&self) -> CliResult<Vec<PathBuf>> {
        match &self.command {
            Command::Sample => commands::cmd_sample(&self.require_config()?),
            Command::PhaseSweep => commands::cmd_phase_sweep(&self.require_config()?),
            Command::Benchmark => commands::cmd_benchmark(&self.require_config()?),
            Command::Collapse { input } => {
                let cfg = self.load_config()?;
                let out = self.out.clone().or_else(|| cfg.as_ref().map(|c| c.output.clone()));
                let out = out.ok_or_else(|| CliError::Usage("collapse needs --out or --config".into()))?;
                let input = input.clone().unwrap_or_else(|| out.join("tau.csv"));
                let opts = cfg.map(|c| c.collapse).unwrap_or_default();
                commands::cmd_collapse(&input, &opts, &out)
            }
            Command::UnravelOptimize { noise, eps } => {
                let cfg = self.load_config()?;
                let request = commands::UnravelRequest::resolve(cfg.as_ref(), *noise, eps, self.seed_override)?;
                let out = self.out.clone().or_else(|| cfg.map(|c| c.output));
                commands::cmd_unravel_optimize(&request, out.as_deref())
            }
        }
    }

    /// Runs the command inside a pool of `--workers` threads and returns the
    /// files written.
    pub fn run(&self) -> CliResult<Vec<PathBuf>> {
        match self.workers {
            Some(0) => Err(CliError::Usage("--workers must be positive".into())),
            Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| self.dispatch()),
            None => self.dispatch(),
        }
    }
}
