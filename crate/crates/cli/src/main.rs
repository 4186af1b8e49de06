//! `attcycles`: runs the factuality pipeline stage by stage. Every stage
//! reads and writes plain files under one output directory.

mod commands;
mod config;
mod files;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use attention_cycles::eval::VideoSource;
use attention_cycles::features::{FeatureSet, MatrixFormat};
use attention_cycles::ingest::{EmbeddingFormat, Interpolation, SplitRatios};

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "attcycles",
    version,
    about = "Attention-cycle features and factuality classification"
)]
pub struct Cli {
    /// TOML file with default paths and settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Seed for every random step (split, oversampling, synthetic data).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Stage output directory.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Experiment spec (TOML or JSON).
    #[arg(long)]
    pub experiment: Option<std::path::PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load snapshots and manifest, build hourly series, filter, label and split.
    Prepare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snapshots: Option<std::path::PathBuf>,
        #[arg(long)]
        manifest: Option<std::path::PathBuf>,
        /// Directory the manifest's embedding paths are relative to.
        #[arg(long)]
        embeddings: Option<std::path::PathBuf>,
        #[arg(long)]
        embedding_format: Option<EmbeddingFormat>,
        #[arg(long)]
        interpolation: Option<Interpolation>,
        /// Train, dev and test fractions, e.g. 0.7,0.15,0.15.
        #[arg(long)]
        split: Option<SplitRatios>,
    },
    /// Compute video feature matrices.
    Extract {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "attention")]
        features: FeatureSet,
        #[arg(long)]
        format: Option<MatrixFormat>,
    },
    /// Fit attention feature selection on the training videos.
    Select {
        #[command(flatten)]
        common: Common,
        /// Features kept per method; overrides the experiment spec.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Train the video classifier(s) and predict every video.
    TrainVideo {
        #[command(flatten)]
        common: Common,
        /// Train only this source instead of every source the spec needs.
        #[arg(long)]
        source: Option<VideoSourceArg>,
    },
    /// Build channel features from video predictions and train the channel classifier.
    TrainChannel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        format: Option<MatrixFormat>,
    },
    /// Collate stage summaries into a report.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Run an ablation grid over channel feature groups.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Grid file; defaults to the built-in per-family grid.
        #[arg(long)]
        grid: Option<std::path::PathBuf>,
    },
    /// Write a synthetic snapshot log and manifest.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Channels per class, low,mixed,high.
        #[arg(long, default_value = "30,15,5")]
        sizes: String,
        #[arg(long)]
        min_videos: Option<usize>,
        #[arg(long)]
        max_videos: Option<usize>,
    },
    /// Print a report or ablation JSON file as a text table.
    Report {
        /// report.json or ablation.json
        input: std::path::PathBuf,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum VideoSourceArg {
    Attention,
    Text,
}

impl From<VideoSourceArg> for VideoSource {
    fn from(v: VideoSourceArg) -> Self {
        match v {
            VideoSourceArg::Attention => VideoSource::Attention,
            VideoSourceArg::Text => VideoSource::Text,
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(dispatch(std::env::args_os()))
}

/// Parses `argv` and runs the subcommand, returning the process exit code.
pub fn dispatch<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_VALIDATION,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match commands::run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
