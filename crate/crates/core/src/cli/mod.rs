//! The `discovery-loop` command-line tool.
//!
//! ```text
//! discovery-loop complete         --config run.conf --out out/
//! discovery-loop simulate         --config run.conf --out out/ [--runs N] [--policy P] ...
//! discovery-loop validate-ranking --config run.conf --out out/
//! discovery-loop report           out/a/trace.csv out/b/trace.csv --out summary/
//! ```
//!
//! `--manifest path/manifest.json` can stand in for `--config` (or, for
//! `report`, the trace list) to rerun a previous invocation.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use config::{Config, Overrides};
use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "discovery-loop", version, about = "Feedback-loop recommender simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the ground-truth rating matrix.
    Complete(RunArgs),
    /// Run the recommend, rate, retrain loop and write a trace.
    Simulate(RunArgs),
    /// Test whether a trained model ranks seen-group items higher.
    ValidateRanking(RunArgs),
    /// Aggregate traces across runs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub config: Option<PathBuf>,
    /// Reuse the configuration recorded in a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// `exploit` or `epsilon_greedy`.
    #[arg(long)]
    pub policy: Option<String>,
    /// `perfect` or `rank_dependent`.
    #[arg(long)]
    pub feedback: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Comma-separated confidence levels for the bound columns.
    #[arg(long = "delta", value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trace CSV files.
    #[arg(required_unless_present = "manifest", conflicts_with = "manifest")]
    pub traces: Vec<PathBuf>,
    /// Aggregate the traces recorded as inputs of an earlier report.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

impl RunArgs {
    /// The effective configuration: file (or manifest snapshot), with
    /// relative paths resolved against its directory, then the overrides.
    pub fn load_config(&self) -> Result<Config> {
        let (mut config, base) = match (&self.config, &self.manifest) {
            (Some(path), _) => (Config::read(path)?, parent_dir(path)),
            (None, Some(path)) => {
                let m = RunManifest::read(path)?;
                (Config::parse(&m.config)?, parent_dir(path))
            }
            (None, None) => return Err(Error::Argument("--config or --manifest is required".into())),
        };
        let base = std::path::absolute(&base).map_err(|e| Error::io(&base, e))?;
        config.resolve_paths(&base);
        Overrides {
            seed: self.seed,
            runs: self.runs,
            iterations: self.iterations,
            epsilon: self.epsilon,
            policy: self.policy.clone(),
            feedback: self.feedback.clone(),
            theta: self.theta,
            deltas: self.deltas.clone(),
        }
        .apply(&mut config)?;
        Ok(config)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Complete(a) => commands::cmd_complete(&a.load_config()?, &a.out),
        Command::Simulate(a) => commands::cmd_simulate(&a.load_config()?, &a.out),
        Command::ValidateRanking(a) => commands::cmd_validate_ranking(&a.load_config()?, &a.out),
        Command::Report(a) => match &a.manifest {
            Some(path) => {
                let m = RunManifest::read(path)?;
                let traces: Vec<PathBuf> = m.inputs.into_iter().map(|d| d.path).collect();
                commands::cmd_report(&traces, &a.out)
            }
            None => commands::cmd_report(&a.traces, &a.out),
        },
    }
}
