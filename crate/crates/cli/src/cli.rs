use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "xlda", version, about = "Cross-lingual data augmentation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load NLI files (JSONL or TSV) into one aligned JSONL corpus.
    Ingest(IngestArgs),
    /// Check alignment: label agreement, coverage and duplicates.
    Validate(ValidateArgs),
    /// Build a monolingual, DMT or XLDA training set.
    Augment(AugmentArgs),
    /// Translate a SQuAD file and recover answer spans.
    AlignSquad(AlignSquadArgs),
    /// Train and score every (target, augmentor) cell.
    Pairwise(PairwiseArgs),
    /// Greedy augmentor curves from a pairwise matrix.
    Greedy(GreedyArgs),
    /// Plot-ready heatmap and BLEU scatter CSVs.
    Report(ReportArgs),
    /// Generate a synthetic aligned corpus (and optionally QA data).
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Directory for all outputs, created if missing.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Global seed; every random stream is derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "XLDA_JOBS")]
    pub jobs: Option<usize>,
    /// key=value overrides; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Jsonl,
    Tsv,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    /// `path` or `lang=path`; the language is required for TSV.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<String>,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: InputFormat,
    /// Keep going past duplicates and label conflicts.
    #[arg(long)]
    pub lenient: bool,
    /// TSV id column; without it rows are aligned by position.
    #[arg(long)]
    pub id_column: Option<String>,
    #[arg(long, default_value = "sentence1")]
    pub premise_column: String,
    #[arg(long, default_value = "sentence2")]
    pub hypothesis_column: String,
    #[arg(long, default_value = "gold_label")]
    pub label_column: String,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Exit 1 when any problem is found.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SettingArg {
    Mono,
    Dmt,
    XldaPair,
    XldaMulti,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Both,
    SingleRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BalanceArg {
    All,
    UniformSample,
}

#[derive(Debug, Args, Default)]
pub struct PolicyArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Also emit the target-language example for each id.
    #[arg(long)]
    pub include_monolingual: bool,
    #[arg(long, value_enum)]
    pub balance: Option<BalanceArg>,
    #[arg(long)]
    pub sample_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub setting: SettingArg,
    #[arg(long)]
    pub target: Option<String>,
    /// Single augmentor, for `xlda-pair`.
    #[arg(long)]
    pub augmentor: Option<String>,
    /// Comma-separated augmentors (`xlda-multi`) or languages (`dmt`).
    #[arg(long)]
    pub languages: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TranslatorArg {
    Identity,
    WordCipher,
    ChunkShuffler,
}

#[derive(Debug, Args)]
pub struct AlignSquadArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub dest: String,
    #[arg(long, default_value = "en")]
    pub source: String,
    /// Built-in mock translator.
    #[arg(long, value_enum, conflicts_with = "translator_cmd")]
    pub translator: Option<TranslatorArg>,
    /// External translator: program and arguments, whitespace-separated.
    #[arg(long)]
    pub translator_cmd: Option<String>,
    #[arg(long, default_value = "\u{27E6}")]
    pub marker: String,
    /// Keep marker-recovered examples in the training output.
    #[arg(long)]
    pub include_marker_phase: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TrainerArg {
    Builtin,
    External,
}

#[derive(Debug, Args, Default)]
pub struct TrainerArgs {
    #[arg(long, value_enum)]
    pub trainer: Option<TrainerArg>,
    /// External trainer: program and arguments, whitespace-separated.
    #[arg(long)]
    pub trainer_cmd: Option<String>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
    /// Comma-separated n-gram orders.
    #[arg(long)]
    pub ngram_orders: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub peak_lr: Option<f64>,
    #[arg(long)]
    pub warmup_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PairwiseArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub trainer: TrainerArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub eval: PathBuf,
    /// Comma-separated; defaults to every language of the training corpus.
    #[arg(long)]
    pub languages: Option<String>,
}

#[derive(Debug, Args)]
pub struct GreedyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub trainer: TrainerArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub eval: PathBuf,
    /// Matrix CSV written by `pairwise`.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Comma-separated targets; defaults to every matrix language.
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: PathBuf,
    /// CSV with columns `lang,bleu`; defaults to the bundled NMT table.
    #[arg(long, conflicts_with = "bleu_pairs")]
    pub bleu: Option<PathBuf>,
    /// Inline table, e.g. `ar:15.8,bg:34.2`.
    #[arg(long)]
    pub bleu_pairs: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LabelRuleArg {
    TokenScores,
    Overlap,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "x1,x2,x3,x4")]
    pub languages: String,
    #[arg(long, default_value_t = 500)]
    pub n_ids: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_eval_ids: usize,
    #[arg(long, default_value_t = 200)]
    pub vocab_size: usize,
    /// Defaults to `--seed`.
    #[arg(long)]
    pub cipher_seed: Option<u64>,
    #[arg(long, value_enum, default_value = "token-scores")]
    pub label_rule: LabelRuleArg,
    /// Also write this many synthetic SQuAD examples to `squad.json`.
    #[arg(long)]
    pub qa: Option<usize>,
}
