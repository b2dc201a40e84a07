//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 fatal error, 2 finished with per-document
//! failures.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

pub use commands::{cmd_gen_synth, cmd_report, cmd_run, cmd_score, cmd_validate_identities};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "redact-retry", version, about = "Detect self-contradictions in documents with LLMs and score evidence extraction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an approach over a dataset and write a JSONL trace file.
    Run(RunArgs),
    /// Score traces against a dataset and emit a report.
    Score(ScoreArgs),
    /// Compare reports side by side; optionally analyse a filter stage.
    Report(ReportArgs),
    /// Check EHR = TPR·EHRC and its precision/recall analogues.
    ValidateIdentities(ValidateArgs),
    /// Generate a synthetic dataset and matching replay fixture.
    GenSynth(GenSynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Http,
    Replay,
}

/// Flags for `run`. Every flag may also come from `--config`; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// TOML file with any of the keys below (snake_case).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// dp, rnr, rnr-uf or rnr-cf
    #[arg(long)]
    pub approach: Option<String>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Replay fixture (prompt digest → response JSON map).
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// OpenAI-compatible base URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_parse_retries: Option<u32>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[arg(long)]
    pub timeout_s: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the aligned text table to stdout.
    #[arg(long)]
    pub table: bool,
    /// Directory for plot-ready CSV files.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    /// Per-document scores as JSONL.
    #[arg(long)]
    pub per_doc: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long, num_args = 1..)]
    pub reports: Vec<PathBuf>,
    /// One table with a column per report instead of one table each.
    #[arg(long)]
    pub compare: bool,
    /// Dataset for the filter analysis.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Redact-and-retry traces (before the filter).
    #[arg(long)]
    pub pre_traces: Option<PathBuf>,
    /// Filtered traces (rnr-uf or rnr-cf).
    #[arg(long, num_args = 1..)]
    pub post_traces: Vec<PathBuf>,
    /// Write the filter analysis as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Report files to check.
    #[arg(long, num_args = 1..)]
    pub reports: Vec<PathBuf>,
    /// Also run this many seeded synthetic datasets through every approach.
    #[arg(long, default_value_t = 0)]
    pub synthetic: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GenSynthArgs {
    /// TOML spec file; flags override its values.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_pos: Option<usize>,
    #[arg(long)]
    pub n_neg: Option<usize>,
    #[arg(long)]
    pub min_sentences: Option<usize>,
    #[arg(long)]
    pub max_sentences: Option<usize>,
    #[arg(long)]
    pub vocab: Option<usize>,
    #[arg(long)]
    pub hit_rate: Option<f64>,
    #[arg(long)]
    pub detect_rate: Option<f64>,
    #[arg(long)]
    pub false_positive_rate: Option<f64>,
    #[arg(long)]
    pub out_dataset: PathBuf,
    #[arg(long)]
    pub out_fixture: PathBuf,
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Score(a) => cmd_score(a),
        Command::Report(a) => cmd_report(a),
        Command::ValidateIdentities(a) => cmd_validate_identities(a),
        Command::GenSynth(a) => cmd_gen_synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FATAL
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(Cli::parse())
}
