//! `job2vec`: job title benchmarking from career records.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// Error carrying the process exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<job2vec::Error> for Failure {
    fn from(e: job2vec::Error) -> Self {
        match e {
            job2vec::Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "job2vec", version, about = "Job title benchmarking as link prediction on a job-transition graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Default)]
struct Common {
    /// `key = value` configuration file; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override any configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic career records and their ground truth.
    GenSynth(GenSynthArgs),
    /// Write the raw title -> normalized title map.
    Aggregate(AggregateArgs),
    /// Build the job graph from career records.
    BuildGraph(BuildGraphArgs),
    /// Split the graph, train every model variant and write the model directory.
    Train(TrainArgs),
    /// Score the trained variants on the held-out test edges.
    Eval(EvalArgs),
    /// Print the nearest titles to a `title@company` query.
    Predict(PredictArgs),
}

#[derive(Args)]
pub struct GenSynthArgs {
    /// Career records output.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Ground-truth output; defaults to the records path with `.truth.tsv`.
    #[arg(long, value_name = "FILE")]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    persons: Option<usize>,
    #[arg(long)]
    companies: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    functions: Option<usize>,
    #[arg(long)]
    lateral_prob: Option<f64>,
    #[arg(long)]
    promote_factor: Option<f64>,
    #[arg(long)]
    noise_word_prob: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
pub struct AggregateArgs {
    /// Career records.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Output TSV; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    min_freq: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
pub struct BuildGraphArgs {
    /// Career records.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Graph output.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long)]
    min_freq: Option<u64>,
    /// Month that resolves `present` end dates (YYYY/MM).
    #[arg(long)]
    snapshot: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Graph file written by build-graph.
    #[arg(long, value_name = "FILE")]
    pub graph: PathBuf,
    /// Directory for tables, checkpoint, split and configuration.
    #[arg(long, value_name = "DIR", default_value = "model")]
    pub model_dir: PathBuf,
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Walk length of the topology edge extension.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    weight_threshold: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Let reconstruction gradients update the view tables.
    #[arg(long)]
    e2e: bool,
    /// Single-threaded, reproducible training.
    #[arg(long)]
    deterministic: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "DIR", default_value = "model")]
    pub model_dir: PathBuf,
    /// Report output; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Comma-separated subsampling rates; each retrains every variant.
    #[arg(long)]
    rates: Option<String>,
    #[arg(long)]
    deterministic: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "DIR", default_value = "model")]
    pub model_dir: PathBuf,
    /// `title@company`.
    #[arg(long)]
    pub query: String,
    /// Number of matches to print.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
}

fn opt<T: ToString>(pairs: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
    if let Some(v) = v {
        pairs.push((key, v.to_string()));
    }
}

/// Defaults, then `base` files, then `--config`, then `--set`, then flags.
fn resolve(common: &Common, base: &[PathBuf], flags: Vec<(&'static str, String)>) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    for p in base.iter().chain(&common.config) {
        cfg.apply_file(p)?;
    }
    for s in &common.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {s:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    for (k, v) in flags {
        cfg.set(k, &v)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenSynth(a) => {
            let mut f = Vec::new();
            opt(&mut f, "persons", &a.persons);
            opt(&mut f, "companies", &a.companies);
            opt(&mut f, "levels", &a.levels);
            opt(&mut f, "functions", &a.functions);
            opt(&mut f, "lateral_prob", &a.lateral_prob);
            opt(&mut f, "promote_factor", &a.promote_factor);
            opt(&mut f, "noise_word_prob", &a.noise_word_prob);
            opt(&mut f, "seed", &a.seed);
            let cfg = resolve(&a.common, &[], f)?;
            commands::gen_synth(&a, &cfg)
        }
        Command::Aggregate(a) => {
            let mut f = Vec::new();
            opt(&mut f, "min_freq", &a.min_freq);
            let cfg = resolve(&a.common, &[], f)?;
            commands::aggregate(&a, &cfg)
        }
        Command::BuildGraph(a) => {
            let mut f = Vec::new();
            opt(&mut f, "min_freq", &a.min_freq);
            opt(&mut f, "snapshot", &a.snapshot);
            let cfg = resolve(&a.common, &[], f)?;
            commands::build_graph(&a, &cfg)
        }
        Command::Train(a) => {
            let mut f = Vec::new();
            opt(&mut f, "dims", &a.dims);
            opt(&mut f, "epochs", &a.epochs);
            opt(&mut f, "k", &a.k);
            opt(&mut f, "lambda", &a.lambda);
            opt(&mut f, "learning_rate", &a.learning_rate);
            opt(&mut f, "negatives", &a.negatives);
            opt(&mut f, "seed", &a.seed);
            opt(&mut f, "weight_threshold", &a.weight_threshold);
            opt(&mut f, "split_seed", &a.split_seed);
            if a.e2e {
                f.push(("e2e", "true".into()));
            }
            if a.deterministic {
                f.push(("deterministic", "true".into()));
            }
            let cfg = resolve(&a.common, &[], f)?;
            commands::train(&a, &cfg)
        }
        Command::Eval(a) => {
            let mut f = Vec::new();
            opt(&mut f, "rates", &a.rates);
            if a.deterministic {
                f.push(("deterministic", "true".into()));
            }
            let saved = a.model_dir.join(commands::RUN_CONF);
            let base: Vec<PathBuf> = if saved.exists() { vec![saved] } else { Vec::new() };
            let cfg = resolve(&a.common, &base, f)?;
            commands::eval(&a, &cfg)
        }
        Command::Predict(a) => commands::predict(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(Failure::Internal(String::new()).code())
        }
    }
}
