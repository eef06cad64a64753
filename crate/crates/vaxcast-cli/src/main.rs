//! Batch pipeline driver for the vaxcast forecasting toolkit.
//!
//! One JSON config file names the raw inputs (clinical dose counts and
//! batched web-search exports), the population parameters, the train/holdout
//! split, the candidate grids, and a master seed. The subcommands run the
//! pipeline in stages and write plot-ready CSV/JSON artifacts into the
//! configured output directory:
//!
//! * `prep` — ingest the raw exports, write the daily target ratio and the
//!   lagged attitude feature matrix.
//! * `fit` — fit the configured base models on the training window and
//!   persist them as JSON.
//! * `evaluate` — score every base model and every stack on the holdout and
//!   write the comparison tables plus the winning stack's weights.
//! * `forecast` — roll the winning stack past the training window.
//! * `keywords` — extract a keyword frequency table from text files.
//!
//! Exit codes: 0 on success, 1 when the run completed but recorded
//! per-model failures, 2 on usage or input errors.

mod commands;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "vaxcast",
    version,
    about = "Batch forecasting pipeline over clinical and web-search signals"
)]
pub struct Cli {
    /// Pipeline configuration file (JSON).
    #[arg(long, global = true, default_value = "config.json", value_name = "FILE")]
    pub config: PathBuf,

    /// Replaces the config's master seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Replaces the config's output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Overrides one config value by dotted path (repeatable),
    /// e.g. `--set split.test_len=14` or `--set roster=["ar","boost"]`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingests the raw exports and writes the target and feature CSVs.
    Prep,
    /// Fits the configured models on the training window and persists them.
    Fit {
        /// Which model group to fit.
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
    },
    /// Scores every model and stack on the holdout and writes the report files.
    Evaluate,
    /// Rolls the winning stacked forecast past the training window.
    Forecast {
        /// Days to forecast (0 writes an empty table).
        #[arg(long, default_value_t = 7)]
        horizon: usize,
        /// Uses only the clinical member of the winning stack
        /// (degenerate weights 0/1/0); needs no web features.
        #[arg(long)]
        clinical_only: bool,
    },
    /// Extracts a keyword frequency table from text files
    /// (each line is one document).
    Keywords {
        /// Input text files.
        #[arg(required = true, value_name = "FILE")]
        files: Vec<PathBuf>,
        /// Output CSV path; defaults to `<out>/keywords.csv`.
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

/// Model group selector for `fit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    /// Autoregressions on the target series only.
    Clinical,
    /// Feature regressions on the attitude signals only.
    Web,
    /// Everything in the roster.
    All,
}

/// Whether a completed command recorded any per-model failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Partial,
}

fn main() -> ExitCode {
    // clap itself exits with code 2 on usage errors, matching our
    // input-error convention.
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
