// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};

use frbs_core::detect::default_tau;
use frbs_core::evaluate::EvalReport;
use frbs_core::regress::LambdaRule;
use frbs_core::segment::w_curve;
use frbs_core::simulate::{generate, scenario_presets};
use frbs_core::{
    make_grid, sobolev_kernel, CvGrid, DetectorConfig, FeatureDesign, FunctionalSeries, KernelMatrix,
    Pipeline, Segment,
};

use crate::data::{read_dataset, read_prices, read_text, returns_dataset, write_dataset, write_text};
use crate::error::{CliError, CliResult};
use crate::report::{MetricsFile, ReportFile, TruthFile, SCHEMA_VERSION};
use crate::{DetectArgs, EvaluateArgs, PrepArgs, ScanArgs, SimulateArgs};

/// Constant penalty used when only --tau is given.
const FALLBACK_LAMBDA: f64 = 0.3;

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => write_text(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::input(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::input(format!("serializing output: {e}")))
}

fn lambda_rule(lambda: f64, r: Option<f64>) -> LambdaRule {
    match r {
        Some(smoothness) => LambdaRule::Rate {
            omega: lambda,
            smoothness,
        },
        None => LambdaRule::constant(lambda),
    }
}

pub fn detect(args: &DetectArgs) -> CliResult<()> {
    let series = read_dataset(&args.input)?;
    let mut config = DetectorConfig {
        delta: args.delta,
        q: args.q,
        alpha: args.alpha,
        mc_draws: args.draws,
        seed: args.seed,
        ..DetectorConfig::default()
    };
    if series.len() < 2 * config.min_fit_len {
        return Err(CliError::input(format!(
            "dataset has {} rows; at least {} are needed",
            series.len(),
            2 * config.min_fit_len
        )));
    }
    if let Some(r) = args.r {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::input(format!("--r must be > 0; got {r}")));
        }
    }
    config
        .validate()
        .map_err(|e| CliError::input(e.to_string()))?;
    let pipeline = Pipeline::new(sobolev_kernel().as_ref(), &series)?;

    let report = if args.lambda.is_none() && args.tau.is_none() {
        if args.r.is_some() {
            // tuning selects a constant penalty; --r only matters with --lambda
            eprintln!("note: --r ignored without --lambda; cross-validation picks a constant penalty");
        }
        pipeline.run_tuned(&series, &config, &CvGrid::default())?
    } else {
        config.lambda_rule = lambda_rule(args.lambda.unwrap_or(FALLBACK_LAMBDA), args.r);
        config.tau = Some(args.tau.unwrap_or_else(|| default_tau(series.len())));
        config
            .validate()
            .map_err(|e| CliError::input(e.to_string()))?;
        pipeline.run(&series, &config)?
    };
    let file = ReportFile::from_report(&report, series.grid().len());
    emit(args.output.as_deref(), &to_json(&file)?)
}

fn truth_path(args: &SimulateArgs) -> PathBuf {
    args.truth.clone().unwrap_or_else(|| {
        let stem = args
            .output
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        args.output.with_file_name(format!("{stem}.truth.json"))
    })
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let spec = scenario_presets(&args.scenario, args.n, args.cbeta, args.seed)
        .map_err(|e| CliError::input(e.to_string()))?;
    let (series, truth) = generate(&spec).map_err(|e| CliError::input(e.to_string()))?;
    write_dataset(&args.output, &series)?;
    let sidecar = TruthFile {
        schema_version: SCHEMA_VERSION,
        scenario: args.scenario.to_uppercase(),
        n: spec.n,
        p: spec.p,
        c_beta: spec.c_beta,
        seed: spec.seed,
        change_points: truth.change_points,
        kappa_sq_true: truth.kappa_sq_true,
    };
    write_text(&truth_path(args), &to_json(&sidecar)?)
}

pub fn prep_sp500(args: &PrepArgs) -> CliResult<()> {
    let prices = read_prices(&args.input)?;
    let (y, x) = returns_dataset(&prices)?;
    let grid = make_grid(x[0].len()).map_err(|e| CliError::input(e.to_string()))?;
    let series = FunctionalSeries::new(grid, y, x).map_err(|e| CliError::input(e.to_string()))?;
    write_dataset(&args.output, &series)
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let report: ReportFile = serde_json::from_str(&read_text(&args.report)?)
        .map_err(|e| CliError::input(format!("{}: {e}", args.report.display())))?;
    let truth: TruthFile = serde_json::from_str(&read_text(&args.truth)?)
        .map_err(|e| CliError::input(format!("{}: {e}", args.truth.display())))?;
    if report.n != truth.n {
        return Err(CliError::input(format!(
            "report covers n={} but truth has n={}",
            report.n, truth.n
        )));
    }
    let intervals: Option<Vec<(f64, f64)>> = report
        .changes
        .iter()
        .map(|c| c.ci.map(|[lo, hi]| (lo, hi)))
        .collect();
    let eval = EvalReport::new(
        &report.preliminary,
        &report.refined,
        &truth.change_points,
        report.n,
        intervals.as_deref(),
    );
    let metrics = MetricsFile {
        schema_version: SCHEMA_VERSION,
        n: report.n,
        k_hat: eval.k_hat,
        k_true: eval.k_true,
        under: eval.under,
        over: eval.over,
        hausdorff_pre: eval.hausdorff_pre,
        hausdorff_fin: eval.hausdorff_scaled,
        covered: eval.covered,
        widths: eval.widths,
    };
    println!("{:<16}{:>12}", "metric", "value");
    println!("{:<16}{:>12}", "K_hat", metrics.k_hat);
    println!("{:<16}{:>12}", "K", metrics.k_true);
    println!("{:<16}{:>12.5}", "d_H pre", metrics.hausdorff_pre);
    println!("{:<16}{:>12.5}", "d_H fin", metrics.hausdorff_fin);
    if let (Some(cov), Some(widths)) = (&metrics.covered, &metrics.widths) {
        for (k, (c, w)) in cov.iter().zip(widths).enumerate() {
            println!("{:<16}{:>12}", format!("covered[{k}]"), c);
            println!("{:<16}{:>12.2}", format!("width[{k}]"), w);
        }
    }
    if let Some(path) = &args.output {
        write_text(path, &to_json(&metrics)?)?;
    }
    Ok(())
}

pub fn scan(args: &ScanArgs) -> CliResult<()> {
    let series = read_dataset(&args.input)?;
    let n = series.len();
    let start = args.start.unwrap_or(0);
    let end = args.end.unwrap_or(n);
    if start >= end || end > n {
        return Err(CliError::input(format!("interval ({start}, {end}] is not inside (0, {n}]")));
    }
    if !(args.lambda > 0.0 && args.lambda.is_finite()) {
        return Err(CliError::input(format!("--lambda must be > 0; got {}", args.lambda)));
    }
    let kmat = KernelMatrix::new(sobolev_kernel().as_ref(), series.grid())?;
    let design = FeatureDesign::new(&series, &kmat)?;
    let curve = w_curve(
        &design,
        Segment { start, end },
        &LambdaRule::constant(args.lambda),
        args.margin,
    )?;
    let mut text = String::from("t,w\n");
    for (t, w) in curve {
        text.push_str(&format!("{t},{w}\n"));
    }
    emit(args.output.as_deref(), &text)
}
