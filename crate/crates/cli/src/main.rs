//! `halluspan` command-line tool.
//!
//! Exit codes: 0 success, 1 validation failures, 2 usage error, 3 I/O error,
//! 4 internal invariant breach. Data goes to standard output (or `--out`),
//! diagnostics to standard error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "halluspan", version, about = "Character-level hallucination span toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct DecodeArgs {
    /// Characters with probability strictly above this are hallucinated
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Drop decoded spans shorter than this
    #[arg(long, default_value_t = 1)]
    min_len: usize,
    /// Merge decoded spans separated by at most this many characters
    #[arg(long, default_value_t = 0)]
    merge_gap: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FileKind {
    Records,
    Predictions,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    None,
    All,
    Random,
    Logit,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Check a record or prediction file; diagnostics go to stderr
    Validate {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FileKind::Records)]
        kind: FileKind,
    },
    /// Print per-token character offsets as JSON lines
    Align {
        /// Record file; omit to use --text and --tokens
        input: Option<PathBuf>,
        #[arg(long, conflicts_with = "input", requires = "tokens")]
        text: Option<String>,
        /// JSON array of token strings
        #[arg(long, conflicts_with = "input", requires = "text")]
        tokens: Option<String>,
    },
    /// Turn per-record `annotations` (one span list per annotator) into soft and hard labels
    Aggregate {
        input: PathBuf,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a reference detector over a record file
    Detect {
        input: PathBuf,
        #[arg(long, value_enum)]
        baseline: Baseline,
        /// Required by the random baseline
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic labeled records
    Synth {
        /// Seed-fact file; defaults to the bundled facts
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Weights for entity_swap,number_perturb,negation_flip,overgeneration_append
        #[arg(long, value_delimiter = ',')]
        mix: Option<Vec<f64>>,
        /// Add per-token log-probabilities that are low on perturbed tokens
        #[arg(long)]
        plant_logprobs: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against gold records
    Score {
        pred: PathBuf,
        gold: PathBuf,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !matches!(failure, commands::Failure::Reported) {
                eprintln!("error: {failure}");
            }
            ExitCode::from(failure.code())
        }
    }
}
