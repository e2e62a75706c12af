// SPDX-License-Identifier: MIT OR Apache-2.0

//! Localization metrics, interval coverage and odd/even cross-validation.

use serde::{Deserialize, Serialize};

use crate::detect::{default_delta, DetectorConfig, IntervalScans};
use crate::error::{FrbsError, Result};
use crate::kernel::KernelMatrix;
use crate::regress::{FeatureDesign, LambdaRule};
use crate::segment::seeded_intervals;
use crate::series::{FunctionalSeries, Segment};

/// Scaled Hausdorff distance between estimated and true change points.
///
/// Estimates are augmented with `1` and `n + 1`, truths with `0` and `n`,
/// so a perfect estimate scores `1/n`, not zero.
pub fn hausdorff(estimates: &[usize], truths: &[usize], n: usize) -> f64 {
    let n = n.max(1);
    let mut est: Vec<i64> = vec![1];
    est.extend(estimates.iter().map(|&v| v as i64));
    est.push(n as i64 + 1);
    let mut tru: Vec<i64> = vec![0];
    tru.extend(truths.iter().map(|&v| v as i64));
    tru.push(n as i64);

    let directed = |from: &[i64], to: &[i64]| {
        from.iter()
            .map(|a| to.iter().map(|b| (a - b).unsigned_abs()).min().unwrap_or(0))
            .max()
            .unwrap_or(0)
    };
    directed(&est, &tru).max(directed(&tru, &est)) as f64 / n as f64
}

/// Closed-interval containment.
pub fn coverage(lo: f64, hi: f64, eta_true: f64) -> bool {
    lo <= eta_true && eta_true <= hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k_hat: usize,
    pub k_true: usize,
    pub under: bool,
    pub over: bool,
    pub hausdorff_pre: f64,
    /// Hausdorff distance of the refined estimates.
    pub hausdorff_scaled: f64,
    /// Per true change, when `k_hat == k_true` and intervals exist.
    pub covered: Option<Vec<bool>>,
    pub widths: Option<Vec<f64>>,
}

impl EvalReport {
    /// `intervals[k]` is the confidence interval paired with `truths[k]`.
    pub fn new(
        preliminary: &[usize],
        refined: &[usize],
        truths: &[usize],
        n: usize,
        intervals: Option<&[(f64, f64)]>,
    ) -> Self {
        let k_hat = refined.len();
        let k_true = truths.len();
        let (covered, widths) = match intervals {
            Some(iv) if k_hat == k_true && iv.len() == k_true => (
                Some(
                    iv.iter()
                        .zip(truths)
                        .map(|(&(lo, hi), &eta)| coverage(lo, hi, eta as f64))
                        .collect(),
                ),
                Some(iv.iter().map(|(lo, hi)| hi - lo).collect()),
            ),
            _ => (None, None),
        };
        Self {
            k_hat,
            k_true,
            under: k_hat < k_true,
            over: k_hat > k_true,
            hausdorff_pre: hausdorff(preliminary, truths, n),
            hausdorff_scaled: hausdorff(refined, truths, n),
            covered,
            widths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub replications: usize,
    pub under: f64,
    pub over: f64,
    pub mean_hausdorff_pre: f64,
    pub sd_hausdorff_pre: f64,
    pub mean_hausdorff_fin: f64,
    pub sd_hausdorff_fin: f64,
    /// Averaged over replications with `k_hat == k_true` only.
    pub coverage: Option<f64>,
    pub mean_width: Option<f64>,
    pub exact_replications: usize,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn detection_summary(reports: &[EvalReport]) -> Result<DetectionSummary> {
    if reports.is_empty() {
        return Err(FrbsError::invalid("detection summary needs at least one report"));
    }
    let count = reports.len() as f64;
    let pre: Vec<f64> = reports.iter().map(|r| r.hausdorff_pre).collect();
    let fin: Vec<f64> = reports.iter().map(|r| r.hausdorff_scaled).collect();
    let (mean_pre, sd_pre) = mean_sd(&pre);
    let (mean_fin, sd_fin) = mean_sd(&fin);

    let exact: Vec<&EvalReport> = reports.iter().filter(|r| r.k_hat == r.k_true).collect();
    let flags: Vec<bool> = exact
        .iter()
        .filter_map(|r| r.covered.as_ref())
        .flatten()
        .copied()
        .collect();
    let widths: Vec<f64> = exact
        .iter()
        .filter_map(|r| r.widths.as_ref())
        .flatten()
        .copied()
        .collect();
    let coverage = (!flags.is_empty())
        .then(|| flags.iter().filter(|&&c| c).count() as f64 / flags.len() as f64);
    let mean_width = (!widths.is_empty()).then(|| widths.iter().sum::<f64>() / widths.len() as f64);

    Ok(DetectionSummary {
        replications: reports.len(),
        under: reports.iter().filter(|r| r.under).count() as f64 / count,
        over: reports.iter().filter(|r| r.over).count() as f64 / count,
        mean_hausdorff_pre: mean_pre,
        sd_hausdorff_pre: sd_pre,
        mean_hausdorff_fin: mean_fin,
        sd_hausdorff_fin: sd_fin,
        coverage,
        mean_width,
        exact_replications: exact.len(),
    })
}

/// Candidate grids for cross-validation. `tau_multipliers` are scaled by
/// `n^{2/5}` of the full series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub lambdas: Vec<f64>,
    pub tau_multipliers: Vec<f64>,
}

impl Default for CvGrid {
    fn default() -> Self {
        Self {
            lambdas: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            tau_multipliers: vec![1.0, 1.5, 2.0, 2.5, 3.0],
        }
    }
}

impl CvGrid {
    pub fn taus(&self, n: usize) -> Vec<f64> {
        let scale = (n as f64).powf(0.4);
        self.tau_multipliers.iter().map(|m| m * scale).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub lambda: f64,
    pub tau: f64,
    /// `None` when the configuration failed.
    pub loss: Option<f64>,
    pub k_hat: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub lambda: f64,
    pub tau: f64,
    pub table: Vec<CvCell>,
}

/// Test loss of one `(λ, change points)` configuration: fit each training
/// segment, predict every test observation with the slope of the segment
/// holding its paired training index.
fn holdout_loss(
    train: &FunctionalSeries,
    test: &FunctionalSeries,
    design: &FeatureDesign,
    changes: &[usize],
    lambda: f64,
) -> Result<f64> {
    let n_train = train.len();
    let mut bounds = vec![0];
    bounds.extend_from_slice(changes);
    bounds.push(n_train);
    let slopes: Vec<Vec<f64>> = bounds
        .windows(2)
        .map(|w| {
            let fit = design.fit(Segment { start: w[0], end: w[1] }, lambda)?;
            Ok(design.slope(&fit.theta))
        })
        .collect::<Result<_>>()?;
    let grid = test.grid();
    let mut loss = 0.0;
    for row in 0..test.len() {
        // test time 2(row+1) pairs with training time row+1
        let train_index = (row + 1).min(n_train);
        let seg = bounds
            .windows(2)
            .position(|w| w[0] < train_index && train_index <= w[1])
            .unwrap_or(slopes.len() - 1);
        let pred = grid.dot(test.curve(row), &slopes[seg]);
        let e = test.responses()[row] - pred;
        loss += e * e;
    }
    Ok(loss)
}

/// Odd/even split cross-validation over constant `λ` and `τ`.
///
/// Odd time indices train, even ones test. For every `λ` the seeded
/// intervals of the training half are scanned once; each `τ` then reuses
/// those statistics. The minimizer breaks ties toward smaller `λ`, then
/// smaller `τ`.
pub fn cross_validate(
    series: &FunctionalSeries,
    kmat: &KernelMatrix,
    grid: &CvGrid,
    config: &DetectorConfig,
) -> Result<CvOutcome> {
    if grid.lambdas.is_empty() || grid.tau_multipliers.is_empty() {
        return Err(FrbsError::invalid("cross-validation grids must be nonempty"));
    }
    let n = series.len();
    if n < 2 * config.min_fit_len.max(1) {
        return Err(FrbsError::InsufficientData(format!(
            "cross-validation needs n >= {}; got {n}",
            2 * config.min_fit_len
        )));
    }
    let train = series.select((0..n).step_by(2));
    let test = series.select((1..n).step_by(2));
    let n_train = train.len();
    let design = FeatureDesign::new(&train, kmat)?;
    let delta = config
        .delta
        .map(|d| (d / 2).max(1))
        .unwrap_or_else(|| default_delta(n_train))
        .min(n_train.saturating_sub(1).max(1));
    let intervals = seeded_intervals(n_train, delta)?;

    let mut lambdas = grid.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut taus = grid.taus(n);
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let mut table = Vec::with_capacity(lambdas.len() * taus.len());
    let mut failures = Vec::new();
    for &lambda in &lambdas {
        let rule = LambdaRule::constant(lambda);
        let scans = match IntervalScans::compute(&design, &intervals, &rule, config.scan_margin()) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("lambda={lambda}: {e}"));
                table.extend(taus.iter().map(|&tau| CvCell {
                    lambda,
                    tau,
                    loss: None,
                    k_hat: None,
                }));
                continue;
            }
        };
        for &tau in &taus {
            let changes = scans.select(tau).locations();
            let cell = match holdout_loss(&train, &test, &design, &changes, lambda) {
                Ok(loss) if loss.is_finite() => CvCell {
                    lambda,
                    tau,
                    loss: Some(loss),
                    k_hat: Some(changes.len()),
                },
                Ok(_) => {
                    failures.push(format!("lambda={lambda}, tau={tau}: non-finite loss"));
                    CvCell { lambda, tau, loss: None, k_hat: Some(changes.len()) }
                }
                Err(e) => {
                    failures.push(format!("lambda={lambda}, tau={tau}: {e}"));
                    CvCell { lambda, tau, loss: None, k_hat: Some(changes.len()) }
                }
            };
            table.push(cell);
        }
    }

    let best = table
        .iter()
        .filter_map(|c| c.loss.map(|l| (l, c)))
        .fold(None::<(f64, &CvCell)>, |acc, (l, c)| match acc {
            Some((bl, _)) if l >= bl => acc,
            _ => Some((l, c)),
        });
    match best {
        Some((_, cell)) => Ok(CvOutcome {
            lambda: cell.lambda,
            tau: cell.tau,
            table: table.clone(),
        }),
        None => Err(FrbsError::TuningFailed(failures.join("; "))),
    }
}
