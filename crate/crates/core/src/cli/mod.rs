//! Command-line surface. Data goes to stdout or `--output`; diagnostics go to stderr.
//!
//! Exit codes: 0 success, 1 validation found problems (`validate` only),
//! 2 I/O failure, 3 invalid input data, 4 invalid configuration.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gvf_core::augment::Style;
use gvf_core::config::Settings;
use gvf_core::fact::VhType;

pub use commands::run;

#[derive(Debug, Parser)]
#[command(name = "gvf", version, about = "Factual-anchor data tools for visual hallucination training and evaluation")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = "GVF_CONFIG")]
    pub config: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every scene or augmented record in a JSONL file.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Turn scene records into original and counter-factual training records.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Probability of emitting a counter-factual sibling per scene.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, value_parser = parse_style)]
        style: Option<Style>,
    },
    /// Stratified train/test split; writes PREFIX.train.jsonl and PREFIX.test.jsonl.
    Split {
        #[arg(long)]
        input: PathBuf,
        /// Output path prefix.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score answers against their anchors.
    Score {
        /// Score requests, or augmented records (scored with --predictions or their expected answers).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        weights: Weights,
    },
    /// Accuracy or F1 of predictions against gold records.
    Evaluate {
        /// Gold records; for f1, repeat as NAME=PATH to report question subsets.
        #[arg(long, required_unless_present = "reference")]
        gold: Vec<String>,
        #[arg(long, required_unless_present = "reference")]
        predictions: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Metric::Oeq)]
        metric: Metric,
        /// Column title in the printed table.
        #[arg(long, default_value = "predictions")]
        method: String,
        /// Machine-readable JSON report.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Print a shipped reference table (oeq or ynq) instead.
        #[arg(long, conflicts_with_all = ["gold", "predictions"])]
        reference: Option<String>,
    },
    /// Mean penalty and combined loss over a list of lambdas.
    Sweep {
        /// Score requests with ce_loss.
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated lambdas.
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        /// Evaluation report for one lambda, as LAMBDA=PATH (repeatable).
        #[arg(long)]
        metrics: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long = "gamma", value_parser = parse_gamma)]
        gamma: Vec<(VhType, f64)>,
    },
}

#[derive(Debug, Args)]
pub struct Weights {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Per-type weight as TYPE=W (repeatable), e.g. counting=2.
    #[arg(long = "gamma", value_parser = parse_gamma)]
    pub gamma: Vec<(VhType, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Oeq,
    Ynq,
    F1,
}

fn parse_style(s: &str) -> Result<Style, String> {
    s.parse()
}

fn parse_gamma(s: &str) -> Result<(VhType, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected TYPE=WEIGHT, got {s:?}"))?;
    let t = VhType::parse_loose(k.trim()).ok_or_else(|| format!("unknown type {k:?}"))?;
    let w: f64 = v.trim().parse().map_err(|_| format!("bad weight {v:?}"))?;
    Ok((t, w))
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Data(String),
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Io(_) => 2,
            CliError::Data(_) => 3,
            CliError::Config(_) => 4,
        })
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Data(m) | CliError::Config(m) => m,
        }
    }
}

pub fn load_settings(cli: &Cli) -> Result<Settings, CliError> {
    Settings::load(cli.config.as_deref()).map_err(|e| CliError::Config(e.to_string()))
}
