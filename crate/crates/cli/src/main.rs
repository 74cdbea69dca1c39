use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use affect_audit::metrics::{BucketMode, ScoreMode, DEFAULT_ALPHA, DEFAULT_TAU};
use affect_audit::Domain;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

mod commands;
mod manifest;

/// Affective bias audits of text corpora and emotion classifiers.
#[derive(Debug, Parser)]
#[command(name = "affect-audit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count emotion occurrences and emotion/group co-occurrences in corpora.
    Scan(ScanArgs),
    /// Compute bias measures from paired sentences and model predictions.
    Eval(EvalArgs),
    /// Lexicon utilities.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Pair corpus utilities.
    #[command(subcommand)]
    Pairs(PairsCommand),
    /// Generate seeded synthetic inputs.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Re-run the command recorded in a run.json and compare outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    /// Corpus file or directory (.txt, .gz); repeatable.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Emotion lexicon; the bundled one when omitted.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Target-term lexicon; the bundled one when omitted.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    #[arg(long, default_value_t = default_workers())]
    pub workers: NonZeroUsize,
    /// Count every matching emotion token instead of once per sentence.
    #[arg(long)]
    pub token_level: bool,
    /// Corpus name used in the tables; defaults to the first input's stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Normalized pair corpus CSV; repeatable.
    #[arg(long, required = true)]
    pub pairs: Vec<PathBuf>,
    /// Prediction JSON-lines file; repeatable.
    #[arg(long, required = true)]
    pub preds: Vec<PathBuf>,
    #[arg(long, default_value_t = ScoreMode::default())]
    pub score_mode: ScoreMode,
    #[arg(long, default_value_t = BucketMode::default())]
    pub bucket_mode: BucketMode,
    /// DP values strictly below this are flagged.
    #[arg(long, default_value_t = DEFAULT_TAU, value_parser = threshold)]
    pub tau: f64,
    /// p-values strictly below this are flagged.
    #[arg(long, default_value_t = DEFAULT_ALPHA, value_parser = threshold)]
    pub alpha: f64,
    /// Also write intensity scatter CSV and SVG files per cell.
    #[arg(long)]
    pub scatter: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum LexiconCommand {
    /// Print term counts and cross-label overlaps; check counts with --expect.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Expected counts, e.g. `anger=162,fear=143` or `M=199,F=211`.
    #[arg(long)]
    pub expect: Option<String>,
}

#[derive(Debug, Subcommand)]
enum PairsCommand {
    /// Convert a source corpus to the normalized pair CSV.
    Ingest(IngestArgs),
    /// Report pairs that differ in more than target terms.
    Lint(LintArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// key = value column mapping; the input is taken as normalized when omitted.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long, default_value = "custom")]
    pub corpus_tag: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LintArgs {
    #[arg(long, required = true)]
    pub pairs: Vec<PathBuf>,
    #[arg(long)]
    pub targets: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Write a synthetic plain-text corpus.
    Corpus(SynthCorpusArgs),
    /// Write a paired corpus and matching predictions.
    Eval(SynthEvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthCorpusArgs {
    /// Approximate size in bytes.
    #[arg(long, default_value_t = 10 * 1024 * 1024)]
    pub bytes: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthEvalArgs {
    #[arg(long, default_value_t = 40)]
    pub pairs_per_domain: usize,
    #[arg(long, default_value = "synthetic")]
    pub model_tag: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Domains to generate; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub domain: Vec<Domain>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn default_workers() -> NonZeroUsize {
    std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN)
}

fn threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1]"))
    }
}

/// A problem with the invocation rather than with the data: exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AFFECT_AUDIT_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scan(a) => commands::scan(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Lexicon(LexiconCommand::Validate(a)) => commands::lexicon_validate(&a),
        Command::Pairs(PairsCommand::Ingest(a)) => commands::pairs_ingest(&a),
        Command::Pairs(PairsCommand::Lint(a)) => commands::pairs_lint(&a),
        Command::Synth(SynthCommand::Corpus(a)) => commands::synth_corpus(&a),
        Command::Synth(SynthCommand::Eval(a)) => commands::synth_eval(&a),
        Command::Replay(a) => manifest::replay(&a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
