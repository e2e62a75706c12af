// SPDX-License-Identifier: MIT OR Apache-2.0

//! Narrowest-over-threshold recursion over seeded intervals, and local
//! refinement of each preliminary estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FrbsError, Result};
use crate::kernel::{gram, KernelMatrix};
use crate::regress::{fit_slope, FeatureDesign, LambdaRule, SegmentFit, DEFAULT_CACHE_CAPACITY};
use crate::segment::{scan_interval, ScanResult, SeededIntervalSet};
use crate::series::{FunctionalSeries, Segment};

/// Tuning state shared by detection and inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub lambda_rule: LambdaRule,
    /// Threshold on `Ŵ`; `None` means `2 n^{2/5}`.
    pub tau: Option<f64>,
    /// Minimum number of observations on each side of a scanned split.
    pub margin: usize,
    pub min_fit_len: usize,
    /// Seeding spacing; `None` means `max(1, n / 10)`.
    pub delta: Option<usize>,
    /// Block half-width for the long-run variance; `None` uses [`crate::inference::default_q`].
    pub q: Option<usize>,
    pub alpha: f64,
    /// Monte-Carlo draws per change point.
    pub mc_draws: usize,
    pub seed: u64,
    pub cache_capacity: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            lambda_rule: LambdaRule::default(),
            tau: None,
            margin: 10,
            min_fit_len: 10,
            delta: None,
            q: None,
            alpha: 0.05,
            mc_draws: 2000,
            seed: 0,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
        }
    }
}

pub fn default_tau(n: usize) -> f64 {
    2.0 * (n as f64).powf(0.4)
}

pub fn default_delta(n: usize) -> usize {
    (n / 10).max(1)
}

impl DetectorConfig {
    pub fn tau_for(&self, n: usize) -> f64 {
        self.tau.unwrap_or_else(|| default_tau(n))
    }

    pub fn delta_for(&self, n: usize) -> usize {
        self.delta.unwrap_or_else(|| default_delta(n))
    }

    /// Scan margin actually applied: never below `min_fit_len`.
    pub fn scan_margin(&self) -> usize {
        self.margin.max(self.min_fit_len).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.lambda_rule.validate()?;
        if let Some(tau) = self.tau {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(FrbsError::invalid(format!("tau must be > 0; got {tau}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(FrbsError::invalid(format!(
                "alpha must lie in (0, 1); got {}",
                self.alpha
            )));
        }
        if self.mc_draws == 0 {
            return Err(FrbsError::invalid("mc_draws must be >= 1"));
        }
        if self.q == Some(0) {
            return Err(FrbsError::invalid("q must be >= 1"));
        }
        Ok(())
    }
}

/// One preliminary estimate and the seeded interval that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreliminaryEstimate {
    pub location: usize,
    pub interval: Segment,
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PreliminarySet {
    pub estimates: Vec<PreliminaryEstimate>,
}

impl PreliminarySet {
    pub fn locations(&self) -> Vec<usize> {
        self.estimates.iter().map(|e| e.location).collect()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }
}

/// Scan statistics of every distinct seeded interval, independent of the
/// recursion window, so they are computed once and reused.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalScans {
    n: usize,
    results: Vec<ScanResult>,
}

impl IntervalScans {
    pub fn compute(
        design: &FeatureDesign,
        intervals: &SeededIntervalSet,
        rule: &LambdaRule,
        margin: usize,
    ) -> Result<Self> {
        if design.len() != intervals.n() {
            return Err(FrbsError::invalid(format!(
                "series length {} differs from interval set n={}",
                design.len(),
                intervals.n()
            )));
        }
        let found: Vec<Option<ScanResult>> = intervals
            .unique()
            .into_par_iter()
            .map(|iv| scan_interval(design, iv, rule, margin))
            .collect::<Result<_>>()?;
        Ok(Self {
            n: intervals.n(),
            results: found.into_iter().flatten().collect(),
        })
    }

    pub fn results(&self) -> &[ScanResult] {
        &self.results
    }

    /// Runs the recursion for threshold `tau` on the cached statistics.
    pub fn select(&self, tau: f64) -> PreliminarySet {
        let mut found = Vec::new();
        let mut windows = vec![Segment {
            start: 0,
            end: self.n,
        }];
        while let Some(window) = windows.pop() {
            let pick = self
                .results
                .iter()
                .filter(|r| r.interval.within(&window) && r.max_value_a > tau)
                .min_by(|a, b| {
                    a.interval
                        .len()
                        .cmp(&b.interval.len())
                        .then(a.interval.start.cmp(&b.interval.start))
                });
            if let Some(r) = pick {
                found.push(PreliminaryEstimate {
                    location: r.argmax_b,
                    interval: r.interval,
                    statistic: r.max_value_a,
                });
                windows.push(Segment {
                    start: r.argmax_b,
                    end: window.end,
                });
                windows.push(Segment {
                    start: window.start,
                    end: r.argmax_b,
                });
            }
        }
        found.sort_by_key(|e| e.location);
        PreliminarySet { estimates: found }
    }
}

/// Preliminary change-point estimates for the whole series.
pub fn frbs(
    design: &FeatureDesign,
    intervals: &SeededIntervalSet,
    config: &DetectorConfig,
) -> Result<PreliminarySet> {
    config.validate()?;
    let tau = config.tau_for(intervals.n());
    let scans = IntervalScans::compute(design, intervals, &config.lambda_rule, config.scan_margin())?;
    Ok(scans.select(tau))
}

/// Span `(s_k, e_k]` covering the last-layer seeded intervals that contain
/// `eta_hat`. When fewer than two contain it (near the ends), the nearest
/// neighbouring interval is merged in.
pub fn refined_interval(eta_hat: usize, intervals: &SeededIntervalSet) -> Result<(usize, usize)> {
    let n = intervals.n();
    if eta_hat == 0 || eta_hat >= n {
        return Err(FrbsError::invalid(format!(
            "estimate {eta_hat} not inside (0, {n})"
        )));
    }
    let last = intervals.last_layer();
    let containing: Vec<usize> = (0..last.len())
        .filter(|&i| last[i].start < eta_hat && eta_hat <= last[i].end)
        .collect();

    let midpoint_gap = |i: usize| {
        let mid2 = last[i].start + last[i].end;
        (mid2 as i64 - 2 * eta_hat as i64).unsigned_abs()
    };
    let mut chosen = containing.clone();
    if chosen.len() < 2 && !last.is_empty() {
        let anchor = match chosen.first() {
            Some(&i) => i,
            None => (0..last.len()).min_by_key(|&i| midpoint_gap(i)).expect("nonempty"),
        };
        let neighbours = [anchor.checked_sub(1), Some(anchor + 1).filter(|&j| j < last.len())];
        let best = neighbours.into_iter().flatten().min_by_key(|&j| midpoint_gap(j));
        chosen = vec![anchor];
        chosen.extend(best);
    }
    let mut s_k = chosen.iter().map(|&i| last[i].start).min().unwrap_or(0);
    let mut e_k = chosen.iter().map(|&i| last[i].end).max().unwrap_or(n);
    if e_k <= eta_hat {
        e_k = last
            .iter()
            .filter(|iv| iv.end > eta_hat)
            .map(|iv| iv.end)
            .min()
            .unwrap_or(n);
    }
    if s_k >= eta_hat {
        s_k = 0;
    }
    Ok((s_k, e_k))
}

/// Refined estimate for one change point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedChangePoint {
    pub k: usize,
    pub s_k: usize,
    pub e_k: usize,
    pub eta_hat: usize,
    pub eta_tilde: usize,
    pub fit_left: SegmentFit,
    pub fit_right: SegmentFit,
    /// True when a half-segment was shorter than `min_fit_len` and the
    /// preliminary estimate was kept.
    pub degraded: bool,
}

/// `Q(t)` for `t = s_k+1 ..= e_k-1` computed from prefix sums of the left
/// and right squared-residual streams.
pub fn q_profile(
    series: &FunctionalSeries,
    s_k: usize,
    e_k: usize,
    left_slope: &[f64],
    right_slope: &[f64],
) -> Vec<f64> {
    let grid = series.grid();
    let m = e_k - s_k;
    let mut left_prefix = vec![0.0; m + 1];
    let mut right_prefix = vec![0.0; m + 1];
    for i in 0..m {
        let row = s_k + i;
        let x = series.curve(row);
        let y = series.responses()[row];
        let rl = y - grid.dot(x, left_slope);
        let rr = y - grid.dot(x, right_slope);
        left_prefix[i + 1] = left_prefix[i] + rl * rl;
        right_prefix[i + 1] = right_prefix[i] + rr * rr;
    }
    let right_total = right_prefix[m];
    (1..m)
        .map(|i| left_prefix[i] + (right_total - right_prefix[i]))
        .collect()
}

/// Index of the minimum of `profile` (entry `i` is `t = s_k + 1 + i`);
/// near-ties resolve to the `t` closest to `eta_hat`, then the smaller.
pub fn argmin_profile(profile: &[f64], s_k: usize, eta_hat: usize) -> Option<usize> {
    let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let tol = 1e-12 * (1.0 + min.abs());
    profile
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= min + tol)
        .map(|(i, _)| s_k + 1 + i)
        .min_by_key(|&t| (t.abs_diff(eta_hat), t))
}

fn fit_on(
    series: &FunctionalSeries,
    kmat: &KernelMatrix,
    seg: Segment,
    rule: &LambdaRule,
) -> Result<SegmentFit> {
    let g = gram(kmat, series, seg)?;
    fit_slope(series, seg, rule.lambda(seg.len()), &g, kmat)
}

/// Refits on `(s_k, η̂]` and `(η̂, e_k]` and minimizes `Q_k` over
/// `s_k < t < e_k`.
pub fn refine(
    series: &FunctionalSeries,
    kmat: &KernelMatrix,
    k: usize,
    eta_hat: usize,
    s_k: usize,
    e_k: usize,
    config: &DetectorConfig,
) -> Result<RefinedChangePoint> {
    if !(s_k < eta_hat && eta_hat < e_k) || e_k > series.len() {
        return Err(FrbsError::invalid(format!(
            "refinement needs s_k < eta_hat < e_k <= n; got ({s_k}, {eta_hat}, {e_k})"
        )));
    }
    let left = Segment { start: s_k, end: eta_hat };
    let right = Segment { start: eta_hat, end: e_k };
    let fit_left = fit_on(series, kmat, left, &config.lambda_rule)?;
    let fit_right = fit_on(series, kmat, right, &config.lambda_rule)?;
    let degraded = left.len() < config.min_fit_len || right.len() < config.min_fit_len;
    let eta_tilde = if degraded {
        eta_hat
    } else {
        let profile = q_profile(
            series,
            s_k,
            e_k,
            fit_left.slope.values(),
            fit_right.slope.values(),
        );
        argmin_profile(&profile, s_k, eta_hat).unwrap_or(eta_hat)
    };
    Ok(RefinedChangePoint {
        k,
        s_k,
        e_k,
        eta_hat,
        eta_tilde,
        fit_left,
        fit_right,
        degraded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::seeded_intervals;

    #[test]
    fn refined_interval_center() {
        let set = seeded_intervals(200, 20).unwrap();
        let (s, e) = refined_interval(100, &set).unwrap();
        assert!(s < 100 && 100 < e);
        assert!((12..=19).contains(&(e - s)), "span {}", e - s);
    }

    #[test]
    fn refined_interval_near_boundary() {
        let set = seeded_intervals(200, 20).unwrap();
        for eta in [1, 2, 5, 195, 199] {
            let (s, e) = refined_interval(eta, &set).unwrap();
            assert!(s < eta && eta < e, "eta={eta}: ({s}, {e}]");
        }
        assert!(refined_interval(0, &set).is_err());
        assert!(refined_interval(200, &set).is_err());
    }

    #[test]
    fn argmin_tie_rules() {
        let flat = vec![0.0; 9];
        assert_eq!(argmin_profile(&flat, 10, 14), Some(14));
        // equidistant tie: smaller t wins
        let prof = vec![1.0, 0.0, 1.0, 0.0, 1.0];
        assert_eq!(argmin_profile(&prof, 0, 3), Some(2));
    }

    #[test]
    fn select_prefers_narrowest_then_leftmost() {
        let mk = |s, e, b, a| ScanResult {
            interval: Segment { start: s, end: e },
            argmax_b: b,
            max_value_a: a,
        };
        let scans = IntervalScans {
            n: 100,
            results: vec![mk(0, 100, 50, 30.0), mk(0, 50, 20, 12.0), mk(25, 75, 40, 11.0)],
        };
        let out = scans.select(10.0);
        // (0,50] and (25,75] have equal length; leftmost wins -> 20 first,
        // then (20,100] window contains (25,75] -> 40
        assert_eq!(out.locations(), vec![20, 40]);
        assert!(scans.select(100.0).is_empty());
    }
}
