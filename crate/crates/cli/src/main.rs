//! `ews`: simulate epidemic scenarios, build datasets, train and evaluate
//! early-warning indicators, and slice empirical case series.

mod commands;
mod manifest;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ews_core::Error;

#[derive(Parser, Debug)]
#[command(name = "ews", version, about = "Early-warning signals for epidemic transitions")]
struct Cli {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one stochastic path and write `trajectory.csv`.
    Simulate(SimulateArgs),
    /// Deterministic reference path, `ode.csv`.
    Ode(OdeArgs),
    /// Labeled residual windows, `dataset.csv` and `scenarios.csv`.
    Dataset(DatasetArgs),
    /// Rolling variance and lag-1 AC of a series column.
    Indicators(IndicatorsArgs),
    /// Fit a classifier to a dataset, `model.json`.
    Train(TrainArgs),
    /// ROC analysis of the learned and generic indicators.
    Eval(EvalArgs),
    /// Effective reproduction number of a case series, `re.csv`.
    Re(ReArgs),
    /// Transcritical and null sub-series of a case series.
    Slice(SliceArgs),
}

#[derive(Args, Debug, Default)]
struct SimulateArgs {
    /// sir-white, sir-environmental, sir-demographic or seir-white.
    #[arg(long)]
    model: Option<String>,
    /// Noise intensities, comma separated; one value is used for every compartment.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    beta0: Option<String>,
    #[arg(long)]
    beta1: Option<String>,
    /// Initial state, comma separated.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    /// Record every n-th step (default: one record per unit time).
    #[arg(long)]
    stride: Option<String>,
    /// Multiplier on the diffusion term; 0 switches noise off for any model.
    #[arg(long)]
    noise_scale: Option<String>,
}

#[derive(Args, Debug, Default)]
struct OdeArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    beta0: Option<String>,
    #[arg(long)]
    beta1: Option<String>,
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    stride: Option<String>,
}

#[derive(Args, Debug, Default)]
struct DatasetArgs {
    /// Comma-separated `kind:transcritical:null[:sigma_upper]` groups.
    #[arg(long)]
    groups: Option<String>,
    /// Window length, 100 or 500.
    #[arg(long)]
    window: Option<String>,
    /// `resample` or `keep` all-zero windows.
    #[arg(long)]
    degenerate: Option<String>,
    #[arg(long)]
    max_attempts: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    span: Option<String>,
}

#[derive(Args, Debug, Default)]
struct IndicatorsArgs {
    /// CSV whose first column is time.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    span: Option<String>,
    #[arg(long)]
    window_frac: Option<String>,
}

#[derive(Args, Debug, Default)]
struct TrainArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// `softmax` or `conv1d`.
    #[arg(long)]
    architecture: Option<String>,
    #[arg(long)]
    filters: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    #[arg(long)]
    test_frac: Option<String>,
    #[arg(long)]
    validation_frac: Option<String>,
    /// File name of the saved model inside the output directory.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Debug, Default)]
struct EvalArgs {
    /// Model file; repeat to form an ensemble.
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Dataset CSV to score window by window.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Fresh scenarios per class scored with expanding-window predictions.
    #[arg(long)]
    scenarios: Option<String>,
    #[arg(long)]
    scenario_model: Option<String>,
    /// Trailing predictions pooled per scenario.
    #[arg(long)]
    last_k: Option<String>,
}

#[derive(Args, Debug, Default)]
struct ReArgs {
    /// `date,cases` CSV.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    si_mean: Option<String>,
    #[arg(long)]
    si_sd: Option<String>,
}

#[derive(Args, Debug, Default)]
struct SliceArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// `date,re_mean` CSV; estimated from the cases when omitted.
    #[arg(long)]
    re: Option<PathBuf>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    si_mean: Option<String>,
    #[arg(long)]
    si_sd: Option<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Contract(_) | Error::UnknownKey(_) | Error::InvalidValue { .. } => 1,
        Error::Divergence { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ews: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
