use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nameid_core::{ColumnSpec, NormalizationPolicy, ReportFormat, TokenLabel};

#[derive(Debug, Parser)]
#[command(
    name = "nameid",
    version,
    about = "Character language models for name identification"
)]
pub struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true, env = "NAMEID_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a character model on a token list and write it as ARPA.
    Train(TrainArgs),
    /// Split a BIO corpus into entity and non-entity token lists.
    Extract(ExtractArgs),
    /// Label tokens as ENTITY or NON_ENTITY.
    Classify(ClassifyArgs),
    /// Pick the entity-perplexity threshold that maximizes F1 on a dev corpus.
    Tune(TuneArgs),
    /// Score predicted labels against a gold BIO corpus.
    Eval(EvalArgs),
    /// Append model-derived boolean feature columns to a BIO corpus.
    Annotate(AnnotateArgs),
    /// Perplexity histogram of a token list under one model.
    Histogram(HistogramArgs),
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    /// Do not apply NFC composition to tokens.
    #[arg(long)]
    pub no_nfc: bool,
    /// Keep leading and trailing whitespace of tokens.
    #[arg(long)]
    pub keep_whitespace: bool,
}

impl NormArgs {
    pub fn policy(&self) -> NormalizationPolicy {
        NormalizationPolicy {
            compose: !self.no_nfc,
            strip_surrounding_whitespace: !self.keep_whitespace,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ColumnArgs {
    /// Zero-based column holding the token.
    #[arg(long, default_value_t = 0)]
    pub token_col: usize,
    /// Zero-based column holding the BIO tag (default: last column).
    #[arg(long)]
    pub tag_col: Option<usize>,
}

impl ColumnArgs {
    pub fn spec(&self) -> ColumnSpec {
        ColumnSpec {
            token: self.token_col,
            tag: self.tag_col,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TiePolicy {
    Entity,
    NonEntity,
}

impl From<TiePolicy> for TokenLabel {
    fn from(t: TiePolicy) -> Self {
        match t {
            TiePolicy::Entity => TokenLabel::Entity,
            TiePolicy::NonEntity => TokenLabel::NonEntity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Jsonl,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Tsv => ReportFormat::Tsv,
            Format::Jsonl => ReportFormat::JsonLines,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Token list, one token per line.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = nameid_core::clm::DEFAULT_ORDER)]
    pub order: usize,
    /// Count every distinct token once.
    #[arg(long)]
    pub dedup: bool,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub entities: PathBuf,
    #[arg(long)]
    pub non_entities: PathBuf,
    /// Token counts as TSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct DecisionArgs {
    /// Disable the rule that labels one-character tokens NON_ENTITY.
    #[arg(long)]
    pub no_length_rule: bool,
    /// Label for tokens with equal perplexities.
    #[arg(long, value_enum, default_value_t = TiePolicy::NonEntity)]
    pub tie: TiePolicy,
}

#[derive(Debug, Args)]
pub struct ModelPair {
    #[arg(long)]
    pub entity_lm: PathBuf,
    #[arg(long)]
    pub nonentity_lm: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["tokens", "corpus"])))]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub models: ModelPair,
    /// Token list, one token per line.
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    /// BIO corpus; every token line is classified.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Fixed entity-perplexity threshold (`inf` disables it).
    #[arg(long, conflicts_with = "dev")]
    pub threshold: Option<f64>,
    /// Tune the threshold on this BIO corpus first.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// One label per token.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-token TSV with both perplexities and the rule that fired.
    #[arg(long)]
    pub audit: Option<PathBuf>,
    #[command(flatten)]
    pub decision: DecisionArgs,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub models: ModelPair,
    #[arg(long)]
    pub dev: PathBuf,
    /// Receives the threshold, or `inf` when none helps.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub decision: DecisionArgs,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted labels, one per token (last column of each line).
    #[arg(long)]
    pub pred: PathBuf,
    /// Gold BIO corpus.
    #[arg(long)]
    pub gold: PathBuf,
    /// Restrict to gold entities absent from this training entity list.
    #[arg(long)]
    pub unseen_against: Option<PathBuf>,
    /// With --unseen-against, compute precision over all tokens.
    #[arg(long, requires = "unseen_against")]
    pub global_precision: bool,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// TOML feature configuration.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct HistogramArgs {
    #[arg(long)]
    pub lm: PathBuf,
    #[arg(long)]
    pub tokens: PathBuf,
    /// Comma-separated, strictly increasing bin edges.
    #[arg(long, value_delimiter = ',', conflicts_with = "bins")]
    pub edges: Option<Vec<f64>>,
    /// Number of log-spaced edges from 1 to the 99th-percentile perplexity.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Model label in JSON-lines output (default: model file name).
    #[arg(long)]
    pub tag: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub norm: NormArgs,
}
