//! Command-line workflows: synthetic dataset generation, genomic dataset
//! construction, training, evaluation, prototype clustering, and the
//! full-model gradient check.
//!
//! Exit codes: 0 success, 1 runtime failure (non-finite loss, failed
//! gradient check), 2 usage or configuration error.

mod commands;
mod dataset_dir;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

pub use dataset_dir::{read_dataset_dir, write_dataset_dir};

/// Prototype matching network workflows.
#[derive(Debug, Parser)]
#[command(name = "pmn", version, about)]
pub struct Cli {
    /// Seed override for commands that sample.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for batch-parallel passes (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Element precision for evaluation passes.
    #[arg(long, global = true, value_parser = ["f32", "f64"], default_value = "f32")]
    pub precision: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic planted-motif dataset from a spec file.
    Synth {
        /// Synthetic spec (TOML).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for dataset files and ground truth.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a dataset from peak calls, a label list, and a genome file.
    Build {
        #[arg(long)]
        peaks: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        window: u64,
        #[arg(long, default_value_t = 50)]
        stride: u64,
        #[arg(long, default_value_t = 1.0)]
        score_threshold: f64,
    },
    /// Train a model on a dataset directory.
    Train {
        /// Dataset directory (train.tsv / valid.tsv / test.tsv / labels.txt).
        #[arg(long)]
        data: PathBuf,
        /// Training configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint and emit a metric report.
    Eval {
        /// Checkpoint file, or a directory of per-label single-label runs.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Which split to score.
        #[arg(long, default_value = "test", value_parser = ["train", "valid", "test"])]
        split: String,
        /// Optional baseline per-label table for percent-increase columns.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster a checkpoint's prototype bank.
    Cluster {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Cluster count for the flat cut.
        #[arg(long)]
        k: usize,
        /// Planted-group ground truth for recovery scoring.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference verification of the full model, all variants.
    Gradcheck {
        /// Optional model geometry override (TOML with PmnConfig fields).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        /// Minimum probed elements per run.
        #[arg(long, default_value_t = 200)]
        min_elements: usize,
    },
}

/// Failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad usage, unparseable input, or configuration mismatch (exit 2).
    Usage(String),
    /// Runtime failure such as a non-finite loss or a failed check (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

pub fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Runs one parsed invocation.
pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        // ignore failure: the global pool may already exist in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match cli.command {
        Command::Synth { spec, out } => commands::synth::run(&spec, &out, cli.seed),
        Command::Build {
            peaks,
            labels,
            genome,
            out,
            window,
            stride,
            score_threshold,
        } => commands::build::run(&peaks, &labels, &genome, &out, window, stride, score_threshold),
        Command::Train { data, config, out } => commands::train::run(&data, &config, &out, cli.seed),
        Command::Eval {
            checkpoint,
            data,
            split,
            baseline,
            out,
        } => commands::eval::run(&checkpoint, &data, &split, baseline.as_deref(), &out, &cli.precision),
        Command::Cluster {
            checkpoint,
            k,
            groups,
            out,
        } => commands::cluster::run(&checkpoint, k, groups.as_deref(), &out),
        Command::Gradcheck {
            config,
            seeds,
            tolerance,
            min_elements,
        } => commands::gradcheck::run(config.as_deref(), seeds, tolerance, min_elements),
    }
}
