//! Command-line pipeline: synthesize or load a bi-temporal pair, pick a pseudo
//! mask with a classical detector, train the siamese network, detect changes
//! in feature space and score the result against a reference map.

pub mod commands;
pub mod config;
pub mod error;
pub mod tiles;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use hyperchange::model::Ablation;

pub use config::{Layout, Overrides, PipelineConfig, Task};
pub use error::{CliError, CliResult};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "HYPERCHANGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hyperchange", version, about = "Self-supervised hyperspectral change detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON pipeline configuration; unset fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output root; every command writes into its own subdirectory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for both scene synthesis and training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Network variant: base, base_ssa or full
    #[arg(long, global = true, value_parser = parse_ablation)]
    pub ablation: Option<Ablation>,

    #[arg(long, global = true, value_enum)]
    pub task: Option<Task>,

    /// Number of horizontal strips processed independently.
    #[arg(long, global = true)]
    pub tile: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic pair with its reference map.
    Synth,
    /// Score the raw pair and select the pseudo mask.
    Predetect,
    /// Train on the pseudo mask and save the checkpoint.
    Train,
    /// Score changes in feature space.
    Detect,
    /// Compare detections with the reference map.
    Evaluate,
    /// Run every stage in order.
    Pipeline,
}

fn parse_ablation(s: &str) -> Result<Ablation, String> {
    s.parse().map_err(|e: hyperchange::Error| e.to_string())
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides { out: self.out.clone(), seed: self.seed, ablation: self.ablation, task: self.task, tile: self.tile }
    }

    pub fn effective_config(&self) -> CliResult<PipelineConfig> {
        let base = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        base.resolve(&self.overrides())
    }
}

pub fn run_command(command: Command, cfg: &PipelineConfig) -> CliResult<()> {
    match command {
        Command::Synth => commands::cmd_synth(cfg),
        Command::Predetect => commands::cmd_predetect(cfg),
        Command::Train => commands::cmd_train(cfg),
        Command::Detect => commands::cmd_detect(cfg),
        Command::Evaluate => commands::cmd_evaluate(cfg),
        Command::Pipeline => commands::cmd_pipeline(cfg),
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    run_command(cli.command, &cli.effective_config()?)
}

/// Reads the thread cap from the environment and sizes the global pool.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{THREADS_ENV}: expected a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("{THREADS_ENV}: {e}")))
}
