mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use usage_eval::embedding::BackendKind;
use usage_eval::{ErrorClass, WeightScheme};

use crate::config::{Config, Metric};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(usage_eval::Error),
}

impl From<usage_eval::Error> for CliError {
    fn from(e: usage_eval::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Contract | ErrorClass::Data => 3,
                ErrorClass::Transport => 4,
            },
        }
    }
}

/// Evaluation toolkit for extracted product usage options.
#[derive(Debug, Parser)]
#[command(name = "usage-eval", version)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel scoring and annotation requests.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score predictions against references (HAMS4, F1, mean MS4 (TP), WMS).
    Evaluate(EvaluateArgs),
    /// Paired permutation test between two systems' predictions.
    Compare(CompareArgs),
    /// Mean pairwise S4 agreement between annotators.
    Agreement(AgreementArgs),
    /// Label reviews with a chat model.
    Annotate(AnnotateArgs),
    /// Filter a raw review dump into clean JSON Lines.
    Preprocess(PreprocessArgs),
    /// Draw the prompt-selection, evaluation, train and validation splits.
    Split(SplitArgs),
    /// Break-even analysis of annotation with a large model versus a small one.
    Feasibility(FeasibilityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the JSON report to this file.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    /// Embedding backend.
    #[arg(long, value_parser = parse_backend)]
    backend: Option<BackendKind>,

    /// Embedding service URL (remote-service, or file-cache write-through).
    #[arg(long)]
    endpoint: Option<String>,

    /// Embedding cache file (file-cache backend).
    #[arg(long)]
    cache_path: Option<PathBuf>,

    /// Maximum concurrent requests to the embedding service.
    #[arg(long)]
    max_in_flight: Option<usize>,

    /// First beta CDF stage as ALPHA,BETA.
    #[arg(long, value_parser = parse_pair)]
    stage1: Option<(f64, f64)>,

    /// Second beta CDF stage as ALPHA,BETA.
    #[arg(long, value_parser = parse_pair)]
    stage2: Option<(f64, f64)>,

    /// Intra-set weighting of options.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<WeightScheme>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    references: PathBuf,
    #[arg(long, value_enum)]
    metric: Option<Metric>,
    /// Lower bound on similarity before taking logs in WMS.
    #[arg(long)]
    sim_floor: Option<f64>,
    /// WMS units: usage-option or whitespace-token.
    #[arg(long)]
    wms_unit: Option<String>,
    #[command(flatten)]
    sim: SimilarityArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Predictions of system A.
    #[arg(long)]
    predictions_a: PathBuf,
    /// Predictions of system B.
    #[arg(long)]
    predictions_b: PathBuf,
    #[arg(long)]
    references: PathBuf,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of comparisons the alpha is divided over.
    #[arg(long)]
    corrections: Option<usize>,
    #[command(flatten)]
    sim: SimilarityArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// Directory with one `<annotator>.jsonl` label file per annotator.
    #[arg(long)]
    labels_dir: PathBuf,
    #[command(flatten)]
    sim: SimilarityArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    /// Reviews as JSON Lines or TSV (optionally gzipped).
    #[arg(long)]
    input: PathBuf,
    /// Label file; existing records are kept and their reviews skipped.
    #[arg(long)]
    labels: PathBuf,
    /// Built-in prompt: plain-2, plain-6, cot-2 or cot-6.
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    requests_per_second: Option<f64>,
    #[arg(long)]
    max_retries: Option<u32>,
    /// Write placeholder records without contacting the endpoint.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    /// Destination JSON Lines file for the kept reviews.
    #[arg(long)]
    reviews: PathBuf,
    /// tsv or jsonl; guessed from the extension by default.
    #[arg(long)]
    input_format: Option<String>,
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    max_words: Option<usize>,
    #[arg(long)]
    bot_threshold: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Preprocessed reviews (JSON Lines).
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving one JSON Lines file per split.
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FeasibilityArgs {
    /// Print the five standard scenarios.
    #[arg(long, conflicts_with_all = ["llm_flops_per_token", "params"])]
    table: bool,
    /// Large-model FLOPs per generated token.
    #[arg(long, conflicts_with = "params")]
    llm_flops_per_token: Option<f64>,
    /// Large-model parameter count; FLOPs per token is twice this.
    #[arg(long)]
    params: Option<f64>,
    #[arg(long)]
    tokens_per_request: Option<f64>,
    #[arg(long)]
    annotation_requests: Option<u64>,
    #[arg(long)]
    base_training_flops: Option<f64>,
    #[arg(long)]
    small_model_flops_per_request: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse().map_err(|e: usage_eval::Error| e.to_string())
}

fn parse_weights(s: &str) -> Result<WeightScheme, String> {
    s.parse().map_err(|e: usage_eval::Error| e.to_string())
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected ALPHA,BETA, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if let Some(jobs) = cfg.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }
    match cli.command {
        Command::Evaluate(a) => commands::evaluate(cfg, a),
        Command::Compare(a) => commands::compare(cfg, a),
        Command::Agreement(a) => commands::agreement(cfg, a),
        Command::Annotate(a) => commands::annotate(cfg, a),
        Command::Preprocess(a) => commands::preprocess(cfg, a),
        Command::Split(a) => commands::split(cfg, a),
        Command::Feasibility(a) => commands::feasibility(cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn pairs_parse() {
        assert_eq!(parse_pair("1.35, 1.65").unwrap(), (1.35, 1.65));
        assert!(parse_pair("1.35").is_err());
        assert!(parse_pair("a,1").is_err());
    }

    #[test]
    fn exit_codes_follow_error_class() {
        let code = |e: usage_eval::Error| CliError::from(e).exit_code();
        assert_eq!(code(usage_eval::Error::contract("x")), 3);
        assert_eq!(code(usage_eval::Error::format(None, 2, "x")), 3);
        assert_eq!(code(usage_eval::Error::transport("x", true)), 4);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }
}
