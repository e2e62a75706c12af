// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON documents written and read by the CLI.

use frbs_core::evaluate::CvOutcome;
use frbs_core::{ChangePointReport, DetectorConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeEntry {
    pub k: usize,
    pub preliminary: usize,
    pub refined: usize,
    pub s_k: usize,
    pub e_k: usize,
    pub refinement_degraded: bool,
    pub kappa_sq: f64,
    pub sigma_inf_sq: Option<f64>,
    pub q: usize,
    /// `[lo, hi]` in time-index units.
    pub ci: Option<[f64; 2]>,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub version: String,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub tuned: bool,
    pub tau: f64,
    pub delta: usize,
    pub preliminary: Vec<usize>,
    pub refined: Vec<usize>,
    pub changes: Vec<ChangeEntry>,
    pub config: DetectorConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cv: Option<CvOutcome>,
}

impl ReportFile {
    pub fn from_report(rep: &ChangePointReport, p: usize) -> Self {
        let mut changes: Vec<ChangeEntry> = rep
            .changes
            .iter()
            .map(|c| ChangeEntry {
                k: c.k,
                preliminary: c.preliminary,
                refined: c.refined,
                s_k: c.s_k,
                e_k: c.e_k,
                refinement_degraded: c.refinement_degraded,
                kappa_sq: c.kappa_sq,
                sigma_inf_sq: c.sigma_inf_sq,
                q: c.q,
                ci: c.ci.map(|ci| [ci.lo, ci.hi]),
                alpha: c.alpha,
                note: c.note.clone(),
            })
            .collect();
        changes.sort_by_key(|c| c.refined);
        let mut refined = rep.refined_locations();
        refined.sort_unstable();
        Self {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: rep.config.seed,
            n: rep.n,
            p,
            tuned: rep.cv.is_some(),
            tau: rep.tau,
            delta: rep.delta,
            preliminary: rep.preliminary_locations(),
            refined,
            changes,
            config: rep.config.clone(),
            cv: rep.cv.clone(),
        }
    }
}

/// Ground truth written next to a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub schema_version: u32,
    pub scenario: String,
    pub n: usize,
    pub p: usize,
    pub c_beta: f64,
    pub seed: u64,
    pub change_points: Vec<usize>,
    pub kappa_sq_true: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema_version: u32,
    pub n: usize,
    pub k_hat: usize,
    pub k_true: usize,
    pub under: bool,
    pub over: bool,
    pub hausdorff_pre: f64,
    pub hausdorff_fin: f64,
    pub covered: Option<Vec<bool>>,
    pub widths: Option<Vec<f64>>,
}
