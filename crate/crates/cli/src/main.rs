//! `vlp`: preprocessing, training, evaluation, reporting and grid sweeps.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "vlp",
    version,
    about = "Knowledge graph completion with reference aggregation",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the distance and reference caches of a dataset.
    Preprocess(PreprocessArgs),
    /// Train a model and write checkpoints, the log and the effective config.
    Train(TrainArgs),
    /// Evaluate a checkpoint and write report.tsv.
    Eval(EvalArgs),
    /// Pretty-print a report.tsv.
    Report(ReportArgs),
    /// Train every point of a hyperparameter grid.
    Sweep(SweepArgs),
}

/// Flags that map one-to-one onto configuration keys. Values stay textual
/// so that every bad value is reported in one go.
#[derive(Args, Debug, Default, Clone)]
pub struct ConfigFlags {
    /// `key = value` file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    dataset: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    out: Option<String>,
    /// transe, distmult, complex or rotate.
    #[arg(long, allow_hyphen_values = true)]
    model: Option<String>,
    /// hlp or vlp.
    #[arg(long, allow_hyphen_values = true)]
    mode: Option<String>,
    /// uniform, selfadv or red.
    #[arg(long, allow_hyphen_values = true)]
    sampler: Option<String>,
    /// l1 or l2 (TransE only).
    #[arg(long, allow_hyphen_values = true)]
    norm: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dim: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    hidden: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    batch: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lr: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    steps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    negs: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    refs: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    cap: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    threads: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eval_every: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    valid_limit: Option<String>,
    /// Score that drives the post-sampling weights: fg or combined.
    #[arg(long, allow_hyphen_values = true)]
    postweight_score: Option<String>,
    /// Uniform pre-sampling with ReD post-weights.
    #[arg(long)]
    no_pre: bool,
    /// ReD pre-sampling with Self-Adv post-weights.
    #[arg(long)]
    no_post: bool,
}

impl ConfigFlags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let opt = [
            ("dataset", &self.dataset),
            ("out", &self.out),
            ("model", &self.model),
            ("mode", &self.mode),
            ("sampler", &self.sampler),
            ("norm", &self.norm),
            ("dim", &self.dim),
            ("hidden", &self.hidden),
            ("batch", &self.batch),
            ("lr", &self.lr),
            ("steps", &self.steps),
            ("gamma", &self.gamma),
            ("lambda", &self.lambda),
            ("alpha", &self.alpha),
            ("alpha0", &self.alpha0),
            ("alpha1", &self.alpha1),
            ("alpha2", &self.alpha2),
            ("tau", &self.tau),
            ("negs", &self.negs),
            ("refs", &self.refs),
            ("cap", &self.cap),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("eval-every", &self.eval_every),
            ("valid-limit", &self.valid_limit),
            ("postweight-score", &self.postweight_score),
        ];
        let mut out: Vec<(&'static str, String)> = opt
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if self.no_pre {
            out.push(("no-pre", "true".into()));
        }
        if self.no_post {
            out.push(("no-post", "true".into()));
        }
        out
    }
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 8)]
    cap: u8,
    /// Reference count N; the cache keeps N + 1 candidates per query.
    #[arg(long, default_value_t = 8)]
    refs: usize,
    /// Pre-sampling temperature; only echoed, samplers are rebuilt from the
    /// distance cache on every run.
    #[arg(long, default_value_t = 1.0)]
    alpha0: f64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    flags: ConfigFlags,
    /// Fail instead of building missing or stale caches.
    #[arg(long)]
    no_auto: bool,
    /// Continue from `<out>/last.vlpc`.
    #[arg(long)]
    resume: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalSplit {
    Test,
    Valid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableView {
    All,
    Overall,
    Distance,
    Relation,
    Rmp,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Defaults to the dataset recorded next to the checkpoint.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// combined, fg-only or fc-only.
    #[arg(long, default_value = "combined")]
    mode: String,
    #[arg(long, value_enum, default_value_t = EvalSplit::Test)]
    on: EvalSplit,
    /// Which part of the report to print.
    #[arg(long, value_enum, default_value_t = TableView::All)]
    split: TableView,
    /// Also write ranks.tsv.
    #[arg(long)]
    dump_ranks: bool,
    /// Output directory (default: the checkpoint's directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    refs: Option<usize>,
    #[arg(long)]
    cap: Option<u8>,
    /// Refuse a checkpoint of a different model kind.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    no_auto: bool,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    report: PathBuf,
    /// Sections to show (overall, distance, relation, rmp-head, rmp-tail).
    #[arg(long = "section")]
    sections: Vec<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Grid file with `key = v1,v2,...` lines.
    #[arg(long)]
    grid: PathBuf,
    #[command(flatten)]
    flags: ConfigFlags,
    #[arg(long)]
    no_auto: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Report(a) => commands::report(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
