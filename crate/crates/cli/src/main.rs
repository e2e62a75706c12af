// SPDX-License-Identifier: MIT OR Apache-2.0

//! `frbs`: change-point detection for scalar-on-function regression series.

mod commands;
mod data;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "frbs", version, about = "Change points in functional regression time series")]
struct Cli {
    /// Worker threads for scans and Monte-Carlo draws (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect change points and attach confidence intervals.
    Detect(DetectArgs),
    /// Write a simulated dataset and its ground truth.
    Simulate(SimulateArgs),
    /// Turn a daily price series into a lagged-return dataset.
    PrepSp500(PrepArgs),
    /// Score a detection report against ground truth.
    Evaluate(EvaluateArgs),
    /// Emit the scan statistic over one interval as CSV.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Dataset CSV with columns y, x_0, .., x_{p-1}.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Ridge penalty. Skips cross-validation together with --tau.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Detection threshold.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Seeded interval spacing (default n/10).
    #[arg(long)]
    pub delta: Option<usize>,
    /// Smoothness r; when set, --lambda is the factor ω of ω m^(-2r/(2r+1)).
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Monte-Carlo draws per change point.
    #[arg(long = "B", default_value_t = 2000)]
    pub draws: usize,
    /// Long-run variance block half-width.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// S1 (one change at n/2) or S2 (changes at n/4 and 5n/8).
    #[arg(long, default_value = "S1")]
    pub scenario: String,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub cbeta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset CSV path.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Truth JSON path (default: dataset path with .truth.json).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Price CSV with a `price` column in time order.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Metrics JSON path; the table still goes to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
    /// Interval start s of (s, e]; default 0.
    #[arg(long)]
    pub start: Option<usize>,
    /// Interval end e; default n.
    #[arg(long)]
    pub end: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub margin: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("input error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = pool.install(|| match &cli.command {
        Command::Detect(a) => commands::detect(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::PrepSp500(a) => commands::prep_sp500(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Scan(a) => commands::scan(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
