//! The `qoeshift` command set: ingest logs, correlate, train, evaluate,
//! predict, stream and report.
//!
//! Exit codes: 0 on success, 2 for usage and input errors, 3 when the inputs
//! are well formed but the requested analysis is undefined (empty
//! alignment, zero-variance correlation, infeasible folds).

pub mod commands;
pub mod config;
pub mod error;
pub mod stream;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qoeshift_core::learners::{Activation, Kind};

pub use error::{CliError, EXIT_DOMAIN, EXIT_USAGE};
pub use stream::{run_stream, StreamEvent, StreamSummary};

use config::Settings;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Md,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Format as ValueEnum>::from_str(s, true).map_err(|_| CliError::Usage(format!("unknown format `{s}`; use md, json or csv")))
    }
}

#[derive(Debug, Parser)]
#[command(name = "qoeshift", version, about = "Predict video quality shifts from RSRP, RSRQ and SNR")]
pub struct Cli {
    /// Master seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat TOML file overriding built-in defaults; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output format for tables and summaries.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align a channel log with a player log into a labeled dataset CSV.
    Ingest(IngestArgs),
    /// Spearman correlation of each channel metric with resolution.
    Correlate(CorrelateArgs),
    /// Fit one classifier and save it as a model file.
    Train(TrainArgs),
    /// Cross-validate and hold-out test one or all classifiers.
    Evaluate(EvaluateArgs),
    /// Classify one channel reading.
    Predict(PredictArgs),
    /// Classify channel-log rows line by line, emitting JSON lines.
    Stream(StreamArgs),
    /// Render tables and heatmaps from saved evaluation reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_name = "PATH")]
    pub channel: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub qoe: PathBuf,
    /// Aligned dataset CSV to write.
    #[arg(long, short, value_name = "PATH")]
    pub output: PathBuf,
    /// JSON ingest report to write.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Maximum timestamp distance for a match, in milliseconds.
    #[arg(long)]
    pub tolerance_ms: Option<i64>,
    /// Date (YYYY-MM-DD) for logs with clock-only timestamps.
    #[arg(long)]
    pub session_date: Option<String>,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

/// Header names replacing the built-in column matching.
#[derive(Debug, Default, Args)]
pub struct ColumnArgs {
    /// Timestamp column in both logs.
    #[arg(long, value_name = "NAME")]
    pub time_column: Option<String>,
    #[arg(long, value_name = "NAME")]
    pub rsrp_column: Option<String>,
    #[arg(long, value_name = "NAME")]
    pub rsrq_column: Option<String>,
    #[arg(long, value_name = "NAME")]
    pub snr_column: Option<String>,
    /// Resolution column in the player log.
    #[arg(long, value_name = "NAME")]
    pub quality_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
}

/// Hyperparameter flags shared by `train` and `evaluate`.
#[derive(Debug, Default, Args)]
pub struct HyperArgs {
    /// Depth limit for decision trees and forest trees.
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Inverse L2 strength for logistic regression.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub svm_lambda: Option<f64>,
    #[arg(long)]
    pub svm_epochs: Option<usize>,
    /// Boosting rounds.
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub shrinkage: Option<f64>,
    #[arg(long)]
    pub stacking_folds: Option<usize>,
    /// MLP training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// MLP learning rate.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long, value_parser = parse_activation)]
    pub activation: Option<Activation>,
}

fn parse_activation(s: &str) -> Result<Activation, String> {
    match s.to_ascii_lowercase().as_str() {
        "relu" => Ok(Activation::Relu),
        "tanh" => Ok(Activation::Tanh),
        _ => Err(format!("unknown activation `{s}`; use relu or tanh")),
    }
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    /// One of dt, rf, lr, svm, gbt, stacking, voting, mlp.
    #[arg(long, value_parser = parse_kind)]
    pub model: Kind,
    /// Model file to write (conventionally `.qsm`).
    #[arg(long, short, value_name = "PATH")]
    pub output: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("which").required(true).args(["model", "all"])))]
pub struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    pub model: Option<Kind>,
    /// Evaluate all eight classifiers.
    #[arg(long)]
    pub all: bool,
    /// Number of cross-validation folds.
    #[arg(long)]
    pub k: Option<usize>,
    /// Share of rows held out for the confusion matrix.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Directory for JSON reports, score tables and heatmaps.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// RSRP in dBm.
    #[arg(long, allow_negative_numbers = true)]
    pub rsrp: f64,
    /// RSRQ in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub rsrq: f64,
    /// SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub snr: f64,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Channel-log rows to read; `-` for standard input.
    #[arg(long, value_name = "PATH", default_value = "-")]
    pub input: PathBuf,
    /// Where to write events; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub session_date: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluation report JSON files written by `evaluate`.
    #[arg(required = true, value_name = "REPORT")]
    pub reports: Vec<PathBuf>,
    /// Directory for score tables and heatmaps.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

impl HyperArgs {
    fn settings(&self) -> Settings {
        Settings {
            max_depth: self.max_depth,
            n_trees: self.n_trees,
            c: self.c,
            max_iter: self.max_iter,
            svm_lambda: self.svm_lambda,
            svm_epochs: self.svm_epochs,
            rounds: self.rounds,
            shrinkage: self.shrinkage,
            stacking_folds: self.stacking_folds,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            activation: self.activation,
            ..Default::default()
        }
    }
}

impl Cli {
    /// Settings from the config file with command-line flags laid on top.
    pub fn settings(&self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let mut flags = match &self.command {
            Command::Ingest(a) => Settings {
                tolerance_ms: a.tolerance_ms,
                session_date: a.session_date.clone(),
                ..Default::default()
            },
            Command::Train(a) => a.hyper.settings(),
            Command::Evaluate(a) => Settings {
                k: a.k,
                test_fraction: a.test_fraction,
                ..a.hyper.settings()
            },
            Command::Stream(a) => Settings {
                session_date: a.session_date.clone(),
                ..Default::default()
            },
            _ => Settings::default(),
        };
        flags.seed = self.seed;
        Ok(file.overlay(&flags))
    }

    pub fn format(&self, settings: &Settings) -> Result<Format, CliError> {
        match (self.format, &settings.format) {
            (Some(f), _) => Ok(f),
            (None, Some(s)) => s.parse(),
            (None, None) => Ok(Format::Md),
        }
    }
}

/// Runs a parsed command line, writing results to `out`.
pub fn run<W: std::io::Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    let settings = cli.settings()?;
    let format = cli.format(&settings)?;
    let ctx = commands::Context {
        seed: settings.seed.unwrap_or(DEFAULT_SEED),
        format,
        settings,
    };
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&ctx, a, out),
        Command::Correlate(a) => commands::correlate(&ctx, a, out),
        Command::Train(a) => commands::train(&ctx, a, out),
        Command::Evaluate(a) => commands::evaluate(&ctx, a, out),
        Command::Predict(a) => commands::predict(&ctx, a, out),
        Command::Stream(a) => commands::stream(&ctx, a, out),
        Command::Report(a) => commands::report(&ctx, a, out),
    }
}
