mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "refreader", version, about = "Incremental referential reader for pronoun resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pretrain the reader as a language model on plain text.
    TrainLm(TrainLmArgs),
    /// Train coreference on GAP-style TSV files.
    TrainCoref(TrainCorefArgs),
    /// Predict and score a GAP-style test file.
    Eval(EvalArgs),
    /// Emit per-token gate activations.
    Trace(TraceArgs),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of memory cells.
    #[arg(long)]
    cells: Option<usize>,
}

#[derive(Args)]
struct TrainLmArgs {
    #[command(flatten)]
    common: Common,
    /// Training text; paragraphs are separated by blank lines. Repeatable.
    #[arg(long, required = true)]
    corpus: Vec<PathBuf>,
    #[arg(long)]
    valid: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Word vectors, one `token v1 .. vD` per line; loaded and frozen.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args)]
struct TrainCorefArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    valid: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Pretrained checkpoint (file or output directory) to warm-start from.
    #[arg(long, conflicts_with = "embeddings")]
    init: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint file or training output directory.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Decision threshold; defaults to the one stored with the model.
    #[arg(long)]
    threshold: Option<f64>,
    /// Where predictions and reports go; defaults to the model's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Jsonl,
    Tsv,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    model: PathBuf,
    /// Plain text file read as one sequence.
    #[arg(long, conflicts_with = "gap", required_unless_present = "gap")]
    input: Option<PathBuf>,
    /// Comma-separated instance ids from --test; their texts are joined in order.
    #[arg(long, requires = "test")]
    gap: Option<String>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "jsonl")]
    trace_format: TraceFormat,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub enum Failure {
    Usage(String),
    Run(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

fn resolve_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string()).map_err(Failure::Usage)?;
    }
    if let Some(cells) = common.cells {
        cfg.set("cells", &cells.to_string()).map_err(Failure::Usage)?;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::TrainLm(a) => {
            let cfg = resolve_config(&a.common)?;
            commands::train_lm(&cfg, &a.corpus, &a.valid, &a.out, a.embeddings.as_deref())
        }
        Command::TrainCoref(a) => {
            let cfg = resolve_config(&a.common)?;
            commands::train_coref(&cfg, &a.train, &a.valid, &a.out, a.init.as_deref(), a.embeddings.as_deref())
        }
        Command::Eval(a) => commands::eval(&a.model, &a.test, a.threshold, a.out.as_deref()),
        Command::Trace(a) => {
            let source = match (&a.input, &a.gap, &a.test) {
                (Some(path), _, _) => commands::TraceSource::Text(path),
                (None, Some(ids), Some(test)) => commands::TraceSource::Gap { ids, test },
                _ => return Err(Failure::Usage("trace needs --input or --gap with --test".into())),
            };
            let tsv = matches!(a.trace_format, TraceFormat::Tsv);
            commands::trace(&a.model, source, tsv, a.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
