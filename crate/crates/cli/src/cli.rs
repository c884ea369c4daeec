use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "annotrack", version, about = "Ensemble LLM annotation pipeline for binary hate-speech labels")]
pub struct Cli {
    /// Seed for every seeded stage. Overrides `seed` in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Log filter for standard error, e.g. `info` or `annotrack=debug`.
    #[arg(long, global = true)]
    pub log_level: Option<String>,

    /// Run configuration (JSON or TOML) with per-stage sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Keep conversational web records and sub-sample them per language.
    Filter(FilterArgs),
    /// Map a raw labelled dataset onto Hate/Neutral examples.
    Ingest(IngestArgs),
    /// Query the four annotator endpoints for label probabilities.
    Annotate(AnnotateArgs),
    /// Fit the two-head meta-learner on annotations and gold labels.
    TrainMeta(TrainMetaArgs),
    /// Label annotated texts with vote, mean or lgb.
    Ensemble(EnsembleArgs),
    /// Score predictions per dataset and per dataset group.
    Evaluate(EvaluateArgs),
    /// Per-model and per-strategy statistics over an annotated pool.
    Stats(StatsArgs),
    /// Serve the scriptable completion endpoint used in tests.
    MockServer(MockServerArgs),
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long = "in", default_value = "-")]
    pub input: PathBuf,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Per-language cap, e.g. `eng=1000`. Repeatable.
    #[arg(long = "quota", value_name = "LANG=COUNT", num_args = 1..)]
    pub quotas: Vec<String>,
    /// Write filter statistics here instead of standard error.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub dataset: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Registry file replacing the built-in one.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// csv, tsv or jsonl. Guessed from the extension by default.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub text_column: Option<String>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub id_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long = "in", default_value = "-")]
    pub input: PathBuf,
    /// Endpoint configuration; falls back to `[annotate]` of `--config`.
    #[arg(long)]
    pub endpoints: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Where texts that failed on any endpoint are written.
    #[arg(long)]
    pub dead_letter: Option<PathBuf>,
    /// Registry used to fill `lang` from a `dataset` field.
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainMetaArgs {
    /// Annotation lines providing the probability features.
    #[arg(long)]
    pub features: PathBuf,
    /// Labelled examples joined to the features by id.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// vote, mean or lgb. Defaults to `[ensemble] strategy`, then vote.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long = "in", default_value = "-")]
    pub input: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Attach dataset and gold from these labelled examples, producing rows
    /// that `evaluate` accepts.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub preds: PathBuf,
    /// Group definitions; defaults to the built-in groups.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    /// `mean` or `fixed:<v>`.
    #[arg(long)]
    pub threshold: Option<String>,
    /// Unit for the mean threshold: group, dataset or global.
    #[arg(long)]
    pub scope: Option<String>,
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Also write an aligned text table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in", default_value = "-")]
    pub input: PathBuf,
    /// Meta-learner model; adds the lgb strategy.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MockServerArgs {
    /// Mock script (JSON). Unscripted models answer with hashed weights.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8089")]
    pub addr: SocketAddr,
}
