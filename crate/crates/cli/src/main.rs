//! `gecwork`: extraction, scoring, corruption, corpus analysis and the
//! annotation service from one binary.
//!
//! Reports are JSON on stdout with the effective configuration as the first
//! field; `--pretty` prints tables instead. Exit codes: 0 success, 1 bad
//! arguments or input, 2 I/O failure.

mod commands;
mod io;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gecwork::corruptor::CorruptionConfig;
use gecwork::domainshift::{DEFAULT_EPO_SAMPLE, DEFAULT_SMOOTHING, DEFAULT_VO_SAMPLE};
use gecwork::editlab::DEFAULT_REORDER_WINDOW;
use gecwork::metrics::{DEFAULT_BETA, DEFAULT_MAX_ORDER};
use gecwork::tokenize::Granularity;
use serde::Serialize;

#[derive(Parser, Serialize)]
#[command(
    name = "gecwork",
    version,
    about = "Grammatical error correction data workbench"
)]
pub struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Print tables instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Extract and classify edits from samples, writing M2 or JSON lines.
    Extract(ExtractArgs),
    /// Edit-level F-beta of system hypotheses against samples.
    Evaluate(EvaluateArgs),
    /// SARI of system hypotheses against samples.
    Sari(SariArgs),
    /// Context Robustness Score over variant groups.
    Crs(CrsArgs),
    /// Domain-shift indicators (VO, TDS, EPO) between corpora.
    Indicators(IndicatorArgs),
    /// Corrupt clean sentences into synthetic training pairs.
    Corrupt(CorruptArgs),
    /// Dataset statistics.
    Stats(StatsArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
}

#[derive(Args, Serialize, Clone)]
pub struct SegArgs {
    /// Token units: char, or word (needs --lexicon).
    #[arg(long, default_value = "char")]
    pub granularity: Granularity,
    /// Word list for word granularity, one word per line.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EditFormat {
    M2,
    Jsonl,
}

#[derive(Args, Serialize)]
pub struct ExtractArgs {
    /// Samples JSON lines ("-" for stdin).
    #[arg(long)]
    pub samples: PathBuf,
    /// Destination ("-" for stdout).
    #[arg(long, default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "m2")]
    pub format: EditFormat,
    /// Largest run of matched tokens bridged when merging a reordering.
    #[arg(long, default_value_t = DEFAULT_REORDER_WINDOW)]
    pub reorder_window: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seg: SegArgs,
}

#[derive(Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub samples: PathBuf,
    /// Hypotheses JSON lines: {"id", "hypothesis"}.
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub seg: SegArgs,
}

#[derive(Args, Serialize)]
pub struct SariArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    pub max_order: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seg: SegArgs,
}

#[derive(Args, Serialize)]
pub struct CrsArgs {
    /// Variant groups JSON lines: {"group_id", "variants": [...]}.
    #[arg(long)]
    pub groups: PathBuf,
    /// Compare hypothesis strings instead of edit patterns.
    #[arg(long)]
    pub strict: bool,
    /// Required variants per group; 0 accepts any count of at least 2.
    #[arg(long, default_value_t = 5)]
    pub variants: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seg: SegArgs,
}

#[derive(Args, Serialize)]
pub struct IndicatorArgs {
    /// Source corpora: samples JSON lines, or M2 files (".m2").
    #[arg(long, num_args = 1.., required = true)]
    pub src: Vec<PathBuf>,
    /// Target corpora, same formats.
    #[arg(long, num_args = 1.., required = true)]
    pub tgt: Vec<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Tokens sampled per corpus for vocabulary overlap.
    #[arg(long, default_value_t = DEFAULT_VO_SAMPLE)]
    pub vo_n: usize,
    /// Edits sampled per corpus for pattern overlap.
    #[arg(long, default_value_t = DEFAULT_EPO_SAMPLE)]
    pub epo_n: usize,
    /// Added to every type count before the divergence.
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub seg: SegArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairFormat {
    /// noisy<TAB>clean
    Tsv,
    /// Samples with the clean sentence as reference.
    Jsonl,
}

#[derive(Args, Serialize)]
pub struct CorruptArgs {
    /// Clean sentences, one per line ("-" for stdin).
    #[arg(long)]
    pub input: PathBuf,
    /// Destination ("-" for stdout).
    #[arg(long, default_value = "-")]
    pub output: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Character confusions, "key<TAB>alt1 alt2 ...".
    #[arg(long)]
    pub char_confusions: PathBuf,
    /// Word confusions, same format.
    #[arg(long)]
    pub word_confusions: Option<PathBuf>,
    /// Vocabulary for random replacements and insertions.
    #[arg(long)]
    pub vocab: PathBuf,
    /// Word list used when a sentence is segmented into words.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: PairFormat,
    #[arg(long, default_value_t = CorruptionConfig::default().token_prob)]
    pub token_prob: f64,
    #[arg(long, default_value_t = CorruptionConfig::default().op_weights.replace)]
    pub replace: f64,
    #[arg(long, default_value_t = CorruptionConfig::default().op_weights.insert)]
    pub insert: f64,
    #[arg(long, default_value_t = CorruptionConfig::default().op_weights.delete)]
    pub delete: f64,
    #[arg(long, default_value_t = CorruptionConfig::default().op_weights.swap)]
    pub swap: f64,
    #[arg(long, default_value_t = CorruptionConfig::default().replace_confusion_prob)]
    pub replace_confusion_prob: f64,
    #[arg(long, default_value_t = CorruptionConfig::default().insert_same_prob)]
    pub insert_same_prob: f64,
    #[arg(long, default_value_t = CorruptionConfig::default().word_granularity_prob)]
    pub word_granularity_prob: f64,
}

#[derive(Args, Serialize)]
pub struct StatsArgs {
    /// One or more samples files; each is a row.
    #[arg(long, num_args = 1.., required = true)]
    pub samples: Vec<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub seg: SegArgs,
}

#[derive(Args, Serialize)]
pub struct ServeArgs {
    /// Event log, created if missing.
    #[arg(long, env = annoserve::ENV_LOG)]
    pub log: PathBuf,
    #[arg(long, env = annoserve::ENV_ADDR, default_value = annoserve::DEFAULT_ADDR)]
    pub addr: SocketAddr,
    /// Seed for task assignment draws.
    #[arg(long, env = "ANNO_SEED")]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub annotators_per_task: usize,
    /// Sync the log to disk after every event.
    #[arg(long)]
    pub fsync: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gecwork: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
