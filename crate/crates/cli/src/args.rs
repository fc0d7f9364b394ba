use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use treesum_core::EncoderKind;

#[derive(Debug, Parser)]
#[command(
    name = "treesum",
    version,
    about = "Summarize source code with tree-structured LSTM encoders",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter a JSON-lines corpus, split it and build vocabularies.
    Prepare(PrepareArgs),
    /// Train a model on a prepared corpus.
    Train(TrainArgs),
    /// Score a checkpoint on one split of a prepared corpus.
    Eval(EvalArgs),
    /// Print one generated comment per input program.
    Summarize(SummarizeArgs),
    /// Show which subtrees each generated word attends to.
    InspectAttention(InspectArgs),
    /// Write a synthetic mini-language corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Input corpus, one JSON record per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.8, 0.1, 0.1])]
    pub ratios: Vec<f64>,
    /// Keep constructors, accessors and testers (size and comment rules still apply).
    #[arg(long)]
    pub no_filter: bool,
    #[arg(long, default_value_t = 30_000)]
    pub id_limit: usize,
    #[arg(long, default_value_t = 1_000)]
    pub literal_limit: usize,
    #[arg(long, default_value_t = 30_000)]
    pub comment_limit: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `prepare`.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for the checkpoint and training log.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with model settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub encoder: Option<EncoderKind>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub layers: Option<u8>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Directory written by `prepare`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test", value_parser = ["train", "valid", "test"])]
    pub split: String,
    /// JSON file with bucket edges per dimension.
    #[arg(long)]
    pub buckets: Option<PathBuf>,
    /// Output directory; defaults to the checkpoint's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the beam width stored in the checkpoint.
    #[arg(long)]
    pub beam: Option<usize>,
    /// Score the references against themselves instead of model output.
    #[arg(long)]
    pub gold: bool,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Emit JSON lines with the attention matrix instead of plain comments.
    #[arg(long)]
    pub attention: bool,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Mini-language sources, or JSON trees when the name ends in `.json`.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Attended positions listed per word.
    #[arg(long, default_value_t = 3)]
    pub top: usize,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Prefix of the generated record ids.
    #[arg(long, default_value = "s")]
    pub prefix: String,
}
