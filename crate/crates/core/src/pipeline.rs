// SPDX-License-Identifier: MIT OR Apache-2.0

//! End-to-end detection: optional tuning, preliminary scan, refinement and
//! confidence intervals.

use serde::{Deserialize, Serialize};

use crate::detect::{frbs, refine, refined_interval, DetectorConfig, PreliminarySet, RefinedChangePoint};
use crate::error::{FrbsError, Result};
use crate::evaluate::{cross_validate, CvGrid, CvOutcome};
use crate::inference::{
    confidence_interval, default_q, estimate_kappa_sq, lrv, sample_cov, simulate_argmin,
    ConfidenceInterval,
};
use crate::kernel::{Kernel, KernelMatrix};
use crate::regress::{FeatureDesign, LambdaRule};
use crate::segment::seeded_intervals;
use crate::series::{FunctionalSeries, Segment};

/// Inference attached to one refined change point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeSummary {
    pub k: usize,
    pub preliminary: usize,
    pub refined: usize,
    pub s_k: usize,
    pub e_k: usize,
    pub refinement_degraded: bool,
    pub kappa_sq: f64,
    pub sigma_inf_sq: Option<f64>,
    pub q: usize,
    pub ci: Option<ConfidenceInterval>,
    pub alpha: f64,
    /// Why inference was skipped, if it was.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointReport {
    pub n: usize,
    pub preliminary: PreliminarySet,
    pub changes: Vec<ChangeSummary>,
    pub config: DetectorConfig,
    pub tau: f64,
    pub delta: usize,
    pub cv: Option<CvOutcome>,
}

impl ChangePointReport {
    pub fn preliminary_locations(&self) -> Vec<usize> {
        self.preliminary.locations()
    }

    pub fn refined_locations(&self) -> Vec<usize> {
        self.changes.iter().map(|c| c.refined).collect()
    }
}

/// Per-change Monte-Carlo seed derived from the run seed.
pub fn change_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Detection pipeline with a fixed kernel matrix.
pub struct Pipeline {
    kmat: KernelMatrix,
}

impl Pipeline {
    pub fn new(kernel: &dyn Kernel, series: &FunctionalSeries) -> Result<Self> {
        Ok(Self {
            kmat: KernelMatrix::new(kernel, series.grid())?,
        })
    }

    pub fn kernel_matrix(&self) -> &KernelMatrix {
        &self.kmat
    }

    /// Picks `(λ, τ)` by cross-validation and runs [`Pipeline::run`].
    pub fn run_tuned(
        &self,
        series: &FunctionalSeries,
        config: &DetectorConfig,
        grid: &CvGrid,
    ) -> Result<ChangePointReport> {
        let cv = cross_validate(series, &self.kmat, grid, config)?;
        let mut tuned = config.clone();
        tuned.lambda_rule = LambdaRule::constant(cv.lambda);
        tuned.tau = Some(cv.tau);
        let mut report = self.run(series, &tuned)?;
        report.cv = Some(cv);
        Ok(report)
    }

    /// Preliminary detection, refinement and inference with `config` as is.
    pub fn run(&self, series: &FunctionalSeries, config: &DetectorConfig) -> Result<ChangePointReport> {
        config.validate()?;
        let n = series.len();
        if n < 2 * config.min_fit_len.max(1) {
            return Err(FrbsError::InsufficientData(format!(
                "series of length {n} is shorter than 2 x min_fit_len"
            )));
        }
        let delta = config.delta_for(n).min(n - 1);
        let intervals = seeded_intervals(n, delta)?;
        let design = FeatureDesign::new(series, &self.kmat)?;
        let preliminary = frbs(&design, &intervals, config)?;

        let mut refined: Vec<RefinedChangePoint> = Vec::with_capacity(preliminary.len());
        for (k, est) in preliminary.estimates.iter().enumerate() {
            let (s_k, e_k) = refined_interval(est.location, &intervals)?;
            refined.push(refine(series, &self.kmat, k, est.location, s_k, e_k, config)?);
        }

        let q = match config.q {
            Some(q) => q,
            None if refined.is_empty() => 1,
            None => default_q(&refined.iter().map(|r| r.e_k - r.s_k).collect::<Vec<_>>())?,
        };
        let etas: Vec<usize> = refined.iter().map(|r| r.eta_tilde).collect();

        let changes = refined
            .iter()
            .map(|r| self.infer(series, r, &etas, q, config))
            .collect::<Result<Vec<_>>>()?;

        Ok(ChangePointReport {
            n,
            preliminary,
            changes,
            config: config.clone(),
            tau: config.tau_for(n),
            delta,
            cv: None,
        })
    }

    fn infer(
        &self,
        series: &FunctionalSeries,
        r: &RefinedChangePoint,
        etas: &[usize],
        q: usize,
        config: &DetectorConfig,
    ) -> Result<ChangeSummary> {
        let cov = sample_cov(series, Segment { start: r.s_k, end: r.e_k })?;
        let kappa_sq = estimate_kappa_sq(&r.fit_left, &r.fit_right, &cov);
        let mut summary = ChangeSummary {
            k: r.k,
            preliminary: r.eta_hat,
            refined: r.eta_tilde,
            s_k: r.s_k,
            e_k: r.e_k,
            refinement_degraded: r.degraded,
            kappa_sq,
            sigma_inf_sq: None,
            q,
            ci: None,
            alpha: config.alpha,
            note: None,
        };
        if kappa_sq <= 0.0 {
            summary.note = Some("estimated jump size is zero".into());
            return Ok(summary);
        }
        let diff = r.fit_left.slope.sub(&r.fit_right.slope)?;
        let sigma = match lrv(
            series,
            &self.kmat,
            kappa_sq.sqrt(),
            diff.values(),
            etas,
            q,
            &config.lambda_rule,
        ) {
            Ok(est) => est.sigma_inf_sq,
            Err(FrbsError::InsufficientData(msg)) => {
                summary.note = Some(msg);
                return Ok(summary);
            }
            Err(e) => return Err(e),
        };
        summary.sigma_inf_sq = Some(sigma);
        let samples = simulate_argmin(
            sigma.sqrt(),
            series.len(),
            config.mc_draws,
            change_seed(config.seed, r.k),
        );
        summary.ci = Some(confidence_interval(
            r.eta_tilde as f64,
            kappa_sq,
            &samples,
            config.alpha,
        )?);
        Ok(summary)
    }
}
