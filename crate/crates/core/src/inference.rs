// SPDX-License-Identifier: MIT OR Apache-2.0

//! Jump size, long-run variance and Monte-Carlo confidence intervals for
//! refined change points.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FrbsError, Result};
use crate::fgrid::Grid;
use crate::kernel::{gram, KernelMatrix};
use crate::regress::{fit_slope, LambdaRule, SegmentFit};
use crate::series::{FunctionalSeries, Segment};

/// Upper bound on random-walk steps per side in [`simulate_argmin`].
pub const MAX_WALK_STEPS: usize = 2_000_000;

/// Empirical second-moment operator `Σ̂(u_i, u_j) = (1/m) Σ_t X_t(u_i) X_t(u_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceOperator {
    pub segment: Segment,
    pub matrix: DMatrix<f64>,
    weights: Vec<f64>,
}

impl CovarianceOperator {
    /// Builds an operator from an explicit matrix on `grid`.
    pub fn from_matrix(segment: Segment, matrix: DMatrix<f64>, grid: &Grid) -> Result<Self> {
        if matrix.nrows() != grid.len() || matrix.ncols() != grid.len() {
            return Err(FrbsError::invalid("covariance matrix does not match the grid"));
        }
        Ok(Self {
            segment,
            matrix,
            weights: grid.weights().to_vec(),
        })
    }

    /// `Σ̂[f, f] = ∬ f(u) Σ̂(u, v) f(v) du dv`.
    pub fn quad_form(&self, f: &[f64]) -> f64 {
        let wf: Vec<f64> = self.weights.iter().zip(f).map(|(w, v)| w * v).collect();
        let wf = nalgebra::DVector::from_vec(wf);
        wf.dot(&(&self.matrix * &wf))
    }
}

pub fn sample_cov(series: &FunctionalSeries, segment: Segment) -> Result<CovarianceOperator> {
    series.check_segment(&segment)?;
    let p = series.grid().len();
    let m = segment.len();
    let a = DMatrix::from_fn(m, p, |i, u| series.curve(segment.start + i)[u]);
    let mut matrix = a.transpose() * &a;
    matrix /= m as f64;
    CovarianceOperator::from_matrix(segment, matrix, series.grid())
}

/// `κ̂² = Σ̂[β̂_L - β̂_R, β̂_L - β̂_R]`, clamped at zero.
pub fn estimate_kappa_sq(fit_left: &SegmentFit, fit_right: &SegmentFit, cov: &CovarianceOperator) -> f64 {
    let diff: Vec<f64> = fit_left
        .slope
        .values()
        .iter()
        .zip(fit_right.slope.values())
        .map(|(a, b)| a - b)
        .collect();
    cov.quad_form(&diff).max(0.0)
}

/// `⌈(max span)^{2/5} / 2⌉`, at least 1.
pub fn default_q(spans: &[usize]) -> Result<usize> {
    let max = spans
        .iter()
        .copied()
        .max()
        .ok_or_else(|| FrbsError::invalid("default_q needs at least one refined interval"))?;
    Ok(((max as f64).powf(0.4) / 2.0).ceil().max(1.0) as usize)
}

/// 1-based block indices `1..=⌊n/2q⌋` that survive removal of the block
/// holding each refined estimate and its two neighbours.
pub fn surviving_blocks(n: usize, q: usize, refined: &[usize]) -> Vec<usize> {
    let width = 2 * q;
    let total = n / width;
    (1..=total)
        .filter(|&i| {
            refined.iter().all(|&eta| {
                let centre = eta / width;
                !(i + 1 >= centre && i <= centre + 1)
            })
        })
        .collect()
}

/// `|P|⁻¹ Σ F_I²` with `F_I = √2 q^{-1/2} Σ_{j=1}^{q} (Z_{m+j} - Z_{m+j+q})`
/// over the given 1-based blocks `(2q(i-1), 2qi]`.
pub fn block_variance(scores: &[f64], q: usize, blocks: &[usize]) -> Result<f64> {
    if q == 0 {
        return Err(FrbsError::invalid("q must be >= 1"));
    }
    if blocks.is_empty() {
        return Err(FrbsError::InsufficientData(
            "no blocks survive for long-run variance estimation".into(),
        ));
    }
    let scale = (2.0 / q as f64).sqrt();
    let mut total = 0.0;
    for &i in blocks {
        let start = 2 * q * (i - 1);
        if start + 2 * q > scores.len() {
            return Err(FrbsError::invalid(format!("block {i} exceeds the score stream")));
        }
        let d: f64 = (0..q).map(|j| scores[start + j] - scores[start + j + q]).sum();
        let f = scale * d;
        total += f * f;
    }
    Ok(total / blocks.len() as f64)
}

/// Output of [`lrv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrvEstimate {
    pub sigma_inf_sq: f64,
    pub q: usize,
    pub blocks_used: usize,
}

/// Block estimator of the long-run variance for one change point.
///
/// `slope_diff` is `β̂_L - β̂_R` on the grid and `kappa_hat` is `κ̂` (not
/// squared). Each surviving block is refit with `λ` from `rule` at length
/// `2q`.
pub fn lrv(
    series: &FunctionalSeries,
    kmat: &KernelMatrix,
    kappa_hat: f64,
    slope_diff: &[f64],
    refined_etas: &[usize],
    q: usize,
    rule: &LambdaRule,
) -> Result<LrvEstimate> {
    if !(kappa_hat > 0.0 && kappa_hat.is_finite()) {
        return Err(FrbsError::invalid(format!("kappa_hat must be > 0; got {kappa_hat}")));
    }
    if q == 0 {
        return Err(FrbsError::invalid("q must be >= 1"));
    }
    let blocks = surviving_blocks(series.len(), q, refined_etas);
    if blocks.is_empty() {
        return Err(FrbsError::InsufficientData(format!(
            "no blocks of width {} survive in a series of length {}",
            2 * q,
            series.len()
        )));
    }
    let grid = series.grid();
    let width = 2 * q;
    let per_block: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|&i| {
            let seg = Segment {
                start: width * (i - 1),
                end: width * i,
            };
            let g = gram(kmat, series, seg)?;
            let fit = fit_slope(series, seg, rule.lambda(width), &g, kmat)?;
            Ok(seg
                .rows()
                .zip(&fit.fitted)
                .map(|(row, fitted)| {
                    let x = series.curve(row);
                    grid.dot(x, slope_diff) / kappa_hat * (series.responses()[row] - fitted)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    // lay scores out on the full index range so block_variance can address them
    let mut scores = vec![0.0; series.len()];
    for (&i, z) in blocks.iter().zip(&per_block) {
        scores[width * (i - 1)..width * i].copy_from_slice(z);
    }
    let sigma_inf_sq = block_variance(&scores, q, &blocks)?;
    Ok(LrvEstimate {
        sigma_inf_sq,
        q,
        blocks_used: blocks.len(),
    })
}

/// Default per-side walk length `min(⌈n max(5, 30σ²)⌉, MAX_WALK_STEPS)`.
pub fn default_walk_steps(sigma_hat: f64, n: usize) -> usize {
    let span = (5.0f64).max(30.0 * sigma_hat * sigma_hat);
    ((n as f64 * span).ceil() as usize).clamp(1, MAX_WALK_STEPS)
}

/// Draws `B` minimizers of `|r| + σ W(r)` with `W` a two-sided random walk
/// of step `1/n` and increments `N(0, 1/n)`, truncated at the default
/// walk length.
pub fn simulate_argmin(sigma_hat: f64, n: usize, draws: usize, seed: u64) -> Vec<f64> {
    simulate_argmin_with_steps(sigma_hat, n, draws, seed, default_walk_steps(sigma_hat, n))
}

/// [`simulate_argmin`] with an explicit per-side step count.
///
/// Draw `b` uses ChaCha8 stream `b` of `seed`, so results do not depend on
/// scheduling. Each step takes one increment for `r > 0` then one for
/// `r < 0`.
pub fn simulate_argmin_with_steps(
    sigma_hat: f64,
    n: usize,
    draws: usize,
    seed: u64,
    steps: usize,
) -> Vec<f64> {
    let n = n.max(1);
    let inv_n = 1.0 / n as f64;
    let step_sd = inv_n.sqrt();
    (0..draws)
        .into_par_iter()
        .map(|b| {
            if sigma_hat == 0.0 {
                return 0.0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            // both sides advance together, so a longer walk extends the same
            // path and only changes the draw if the minimum lies further out
            let (mut walk_pos, mut walk_neg) = (0.0, 0.0);
            // (value, steps) of the best point on each side; r = 0 gives 0
            let mut pos = (0.0f64, 0usize);
            let mut neg = (0.0f64, 0usize);
            for k in 1..=steps {
                let zp: f64 = rng.sample(StandardNormal);
                let zn: f64 = rng.sample(StandardNormal);
                walk_pos += zp * step_sd;
                walk_neg += zn * step_sd;
                let drift = k as f64 * inv_n;
                let vp = drift + sigma_hat * walk_pos;
                let vn = drift + sigma_hat * walk_neg;
                if vp < pos.0 {
                    pos = (vp, k);
                }
                if vn < neg.0 {
                    neg = (vn, k);
                }
            }
            let take_neg = neg.0 < pos.0 || (neg.0 == pos.0 && neg.1 <= pos.1);
            if take_neg {
                -(neg.1 as f64) * inv_n
            } else {
                pos.1 as f64 * inv_n
            }
        })
        .collect()
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7).
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    /// All Monte-Carlo draws were equal.
    pub degenerate: bool,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `[η̃ + q̂(α/2)/κ̂², η̃ + q̂(1-α/2)/κ̂²]`.
pub fn confidence_interval(
    eta_tilde: f64,
    kappa_sq_hat: f64,
    samples: &[f64],
    alpha: f64,
) -> Result<ConfidenceInterval> {
    if samples.is_empty() {
        return Err(FrbsError::invalid("no Monte-Carlo samples"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FrbsError::invalid(format!("alpha must lie in (0, 1); got {alpha}")));
    }
    if !(kappa_sq_hat > 0.0 && kappa_sq_hat.is_finite()) {
        return Err(FrbsError::invalid(format!(
            "kappa_sq_hat must be > 0; got {kappa_sq_hat}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let degenerate = sorted.first() == sorted.last();
    let lo = eta_tilde + quantile(&sorted, alpha / 2.0) / kappa_sq_hat;
    let hi = eta_tilde + quantile(&sorted, 1.0 - alpha / 2.0) / kappa_sq_hat;
    Ok(ConfidenceInterval { lo, hi, degenerate })
}

/// Inference summary for one change point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub k: usize,
    pub kappa_sq_hat: f64,
    pub sigma_inf_sq_hat: f64,
    pub q: usize,
    #[serde(skip)]
    pub argmin_samples: Vec<f64>,
    pub interval: ConfidenceInterval,
    pub alpha: f64,
}
