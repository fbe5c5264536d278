//! `mcar`: run MCAR tests on CSV files, generate amputated synthetic data,
//! run simulation grids and plot size/power curves.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "mcar", version, about = "Tests for data missing completely at random")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run MCAR tests on a CSV file.
    Test(TestArgs),
    /// Generate a synthetic dataset and amputate it.
    Generate(GenerateArgs),
    /// Run a Monte-Carlo size/power study.
    Simulate(SimulateArgs),
    /// Draw rejection-rate curves from a results CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Token marking a missing value; repeat for several.
    #[arg(long = "na-token", allow_hyphen_values = true, default_values_t = ["NA".to_string(), "NaN".to_string(), String::new()])]
    na_tokens: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Comma-separated tests: an, dn, d2, d2_univariate, d2_general.
    #[arg(long, default_value = "an,d2")]
    tests: String,
    /// Column roles as `complete:incomplete`, e.g. `X1,X2:Y1`.
    #[arg(long)]
    roles: Option<String>,
    /// Write the results as JSON (`.json`) or CSV (any other extension).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistKind {
    StdNormal,
    Clayton,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarginArg {
    Exp,
    Chisq4,
    Uniform,
}

/// Scenario given by flags instead of a JSON file.
#[derive(Args, Clone)]
struct InlineScenario {
    /// Scenario JSON file; the inline flags below are ignored when given.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Number of complete columns.
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Number of incomplete columns.
    #[arg(long, default_value_t = 2)]
    q: usize,
    /// Sample size.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, value_enum, default_value = "std-normal")]
    dist: DistKind,
    /// Clayton copula parameter.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Margin of every Clayton coordinate.
    #[arg(long, value_enum, default_value = "exp")]
    margin: MarginArg,
    /// Mechanism: mcar, mar_1_to_x, mar_rank or mar_mean.
    #[arg(long, default_value = "mcar")]
    mechanism: String,
    /// Missingness probability.
    #[arg(long, default_value_t = 0.12)]
    prob: f64,
    /// High-to-low odds for mar_1_to_x.
    #[arg(long, default_value_t = 9.0)]
    odds: f64,
    /// Master seed; overrides the scenario file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    scenario: InlineScenario,
    /// Output CSV; distribution, mechanism and seed go to a sidecar `<stem>.spec.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "na-token", allow_hyphen_values = true, default_value = "NA")]
    na_token: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: InlineScenario,
    /// Comma-separated tests for inline scenarios.
    #[arg(long, default_value = "an,d2")]
    tests: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Comma-separated missingness probabilities to sweep (inline only).
    #[arg(long, value_delimiter = ',', conflicts_with = "sweep_n")]
    sweep_prob: Vec<f64>,
    /// Comma-separated sample sizes to sweep (inline only).
    #[arg(long, value_delimiter = ',')]
    sweep_n: Vec<usize>,
    /// Replications per cell; overrides the scenario file.
    #[arg(long)]
    replications: Option<usize>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for results.csv and cells.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum XAxis {
    Auto,
    Param,
    N,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV written by `simulate`.
    #[arg(long)]
    input: PathBuf,
    /// Output SVG.
    #[arg(long)]
    out: PathBuf,
    /// Swept field on the x axis.
    #[arg(long, value_enum, default_value = "auto")]
    x: XAxis,
    /// Level drawn as a horizontal reference line.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

/// Failure with the process exit code to report.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<mcar_core::Error> for Failure {
    fn from(e: mcar_core::Error) -> Self {
        use mcar_core::Error;
        match e {
            Error::Spec(_) | Error::Roles(_) => Failure::usage(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let outcome = match cli.command {
        Command::Test(a) => commands::cmd_test(a),
        Command::Generate(a) => commands::cmd_generate(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Plot(a) => plot::cmd_plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
