// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

pub const BUILD_ID: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("CARGO_PKG_NAME"), ")");

#[derive(Parser, Debug)]
#[command(name = "vidhumor", version = BUILD_ID, about = "Curate and evaluate multimodal video-humor explanation corpora")]
pub struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads per stage [default: number of processors]
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the four-step filter over ingested videos
    Filter(FilterArgs),
    /// Build video-to-text prompts
    Prompt(PromptArgs),
    /// Generate explanations for built prompts
    Explain(ExplainArgs),
    /// Score explanations
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Write a seeded data split
    Split(SplitArgs),
    /// Print corpus statistics
    Stats(StatsArgs),
    /// Check annotations against the schema rules
    Validate(ValidateArgs),
    /// Serve the triage and report API
    Serve(ServeArgs),
    /// Serve backend responses replayed from a fixture file
    MockBackend(MockBackendArgs),
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Stop after this stage (a, b, c or d)
    #[arg(long, value_name = "STAGE")]
    pub stage_limit: Option<vidhumor::corpus::FilterStage>,
    /// Compute verdicts without writing anything
    #[arg(long)]
    pub dry_run: bool,
    /// Verdict file [default: <manifest stem>.verdicts.jsonl]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PromptArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Output directory for prompts and build metadata
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Modalities to remove: any of v, t, a
    #[arg(long, value_name = "LIST")]
    pub ablate: Option<String>,
    /// Captions per frame
    #[arg(long)]
    pub k: Option<usize>,
    /// Frame sampling rate
    #[arg(long)]
    pub fps: Option<f64>,
    /// Only these video ids (comma-separated)
    #[arg(long, value_name = "IDS", value_delimiter = ',')]
    pub ids: Vec<String>,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    /// Directory of `<id>.prompt.txt` files
    #[arg(long, value_name = "DIR")]
    pub prompts: PathBuf,
    /// Named completion endpoint [default: the complete backend]
    #[arg(long, value_name = "NAME")]
    pub endpoint: Option<String>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Label of the evaluated system
    #[arg(long, default_value = "model")]
    pub system: String,
    /// Report directory [default: reports/ beside the gold manifest]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SplitSelect {
    /// Split file restricting evaluation to its test partition
    #[arg(long, value_name = "PATH")]
    pub split: Option<PathBuf>,
    /// Test fold of a k-fold split
    #[arg(long, requires = "split")]
    pub fold: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Embedding-based scores with @K reports
    Auto {
        /// Predictions (JSONL of {id, explanation})
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        /// Gold manifest
        #[arg(long, value_name = "PATH")]
        gold: PathBuf,
        /// Metrics: sentbert, ra
        #[arg(long, value_delimiter = ',', default_value = "sentbert,ra")]
        metrics: Vec<vidhumor::evalkit::Metric>,
        #[command(flatten)]
        select: SplitSelect,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Rationale quality through moment localization
    Rq {
        /// Predictions (JSONL of {id, explanation})
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        /// Gold manifest
        #[arg(long, value_name = "PATH")]
        gold: PathBuf,
        /// IoU thresholds [default: 0.3,0.5]
        #[arg(long, value_delimiter = ',')]
        tau: Vec<f64>,
        /// Localize over the captioned segments in this prompt directory
        /// instead of calling the localize backend
        #[arg(long, value_name = "DIR")]
        scenes: Option<PathBuf>,
        #[command(flatten)]
        select: SplitSelect,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Aggregate human ratings and pairwise comparisons
    Human {
        /// Ratings (JSONL of {item_id, system?, ratings[5]})
        #[arg(long, value_name = "PATH")]
        ratings: PathBuf,
        /// Comparisons (JSONL of {pair_id, votes[5]})
        #[arg(long, value_name = "PATH")]
        comparisons: Option<PathBuf>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Classify explanations into humor categories and score per category
    Taxonomy {
        /// Predictions (JSONL of {id, explanation})
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        /// Gold manifest
        #[arg(long, value_name = "PATH")]
        gold: PathBuf,
        /// Category list (JSON) [default: the bundled 20 categories]
        #[arg(long, value_name = "PATH")]
        categories: Option<PathBuf>,
        /// Which explanation decides the category: gold or pred
        #[arg(long, default_value = "gold")]
        classify: commands::eval::ClassifySource,
        #[command(flatten)]
        report: ReportArgs,
    },
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// kfold5, tvt_811, kfold<k> or tvt_<a>_<b>_<c>
    #[arg(long, default_value = "kfold5")]
    pub scheme: String,
    /// Output file [default: <manifest stem>.split.<scheme>.json]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Warn about videos longer than this many seconds
    #[arg(long, default_value_t = vidhumor::corpus::DEFAULT_DURATION_CAP_S)]
    pub duration_cap: f64,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory served under /media [default: the manifest's directory]
    #[arg(long, value_name = "DIR")]
    pub media_root: Option<PathBuf>,
    /// Report directory [default: reports/ beside the manifest]
    #[arg(long, value_name = "DIR")]
    pub reports_dir: Option<PathBuf>,
    /// Built review UI to serve at /
    #[arg(long, value_name = "DIR")]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MockBackendArgs {
    /// Fixture file (JSON)
    #[arg(long, value_name = "PATH")]
    pub fixture: PathBuf,
    /// Port to bind; 0 picks a free one
    #[arg(long, default_value_t = 8900)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::argument("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::new("internal", e.to_string()))?;
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let ctx = commands::Context { cfg, seed: cli.seed };
    match cli.command {
        Command::Filter(a) => commands::pipeline::filter(&ctx, a),
        Command::Prompt(a) => commands::pipeline::prompt(&ctx, a),
        Command::Explain(a) => commands::pipeline::explain(&ctx, a),
        Command::Eval(e) => commands::eval::run(&ctx, e),
        Command::Split(a) => commands::corpus::split(&ctx, a),
        Command::Stats(a) => commands::corpus::stats(a),
        Command::Validate(a) => commands::corpus::validate(a),
        Command::Serve(a) => commands::serve::serve(&ctx, a),
        Command::MockBackend(a) => commands::serve::mock_backend(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("VIDHUMOR_LOG").unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
