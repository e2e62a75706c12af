// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded intervals and the likelihood-ratio scan statistic
//! `Ŵ_t^{s,e} = RSS(s,e] - RSS(s,t] - RSS(t,e]`.

use serde::{Deserialize, Serialize};

use crate::error::{FrbsError, Result};
use crate::fgrid::GridFunction;
use crate::inference::CovarianceOperator;
use crate::regress::{segment_rss, FeatureDesign, LambdaRule, RssCache};
use crate::series::Segment;

/// Deterministic multi-resolution interval collection.
///
/// Layer `k` (1-based) has intervals of length `n / 2^{k-1}` shifted by
/// half that length: `(⌈(i-1) n/2^k⌉, ⌊(i+1) n/2^k⌋]` for `i = 1..2^k - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeededIntervalSet {
    n: usize,
    delta: usize,
    layers: Vec<Vec<Segment>>,
    /// Intervals with `e <= s + 1` removed during construction.
    dropped: usize,
}

impl SeededIntervalSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<Segment>] {
        &self.layers
    }

    pub fn last_layer(&self) -> &[Segment] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Every distinct interval, ordered by (start, end).
    pub fn unique(&self) -> Vec<Segment> {
        let mut all: Vec<Segment> = self.layers.iter().flatten().copied().collect();
        all.sort();
        all.dedup();
        all
    }

    /// Number of retained intervals summed over layers.
    pub fn count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }
}

/// Number of layers `⌈log₂(n/Δ)⌉ + 1`, computed in integers.
pub fn layer_count(n: usize, delta: usize) -> usize {
    let mut k = 0usize;
    while (delta as u128) << k < n as u128 {
        k += 1;
    }
    k + 1
}

pub fn seeded_intervals(n: usize, delta: usize) -> Result<SeededIntervalSet> {
    if delta == 0 || delta >= n {
        return Err(FrbsError::invalid(format!(
            "seeding needs 0 < delta < n; got delta={delta}, n={n}"
        )));
    }
    let layers_total = layer_count(n, delta);
    let mut layers = Vec::with_capacity(layers_total);
    let mut dropped = 0;
    for k in 1..=layers_total {
        let denom = 1u128 << k;
        let count = (1usize << k) - 1;
        let mut layer = Vec::with_capacity(count);
        for i in 1..=count {
            let lo = (i as u128 - 1) * n as u128;
            let start = lo.div_ceil(denom) as usize;
            let end = ((i as u128 + 1) * n as u128 / denom) as usize;
            if end <= start + 1 {
                dropped += 1;
                continue;
            }
            let seg = Segment { start, end };
            if layer.last() != Some(&seg) {
                layer.push(seg);
            }
        }
        layers.push(layer);
    }
    Ok(SeededIntervalSet {
        n,
        delta,
        layers,
        dropped,
    })
}

/// Maximizer of the scan statistic over one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub interval: Segment,
    pub argmax_b: usize,
    pub max_value_a: f64,
}

/// Admissible split points `s + margin ..= e - margin`, or `None` when the
/// interval is too short.
pub fn split_range(interval: Segment, margin: usize) -> Option<std::ops::RangeInclusive<usize>> {
    let margin = margin.max(1);
    let lo = interval.start + margin;
    let hi = interval.end.checked_sub(margin)?;
    (lo <= hi).then_some(lo..=hi)
}

/// `(t, Ŵ_t)` for every admissible split of `interval`.
pub fn w_curve(
    design: &FeatureDesign,
    interval: Segment,
    rule: &LambdaRule,
    margin: usize,
) -> Result<Vec<(usize, f64)>> {
    let Some(range) = split_range(interval, margin) else {
        return Ok(Vec::new());
    };
    let full = design.segment_rss(interval, rule.lambda(interval.len()))?;
    Ok(design
        .split_rss(interval, rule, range)
        .into_iter()
        .map(|(t, l, r)| (t, full - l - r))
        .collect())
}

/// Scans `interval` and returns its maximizer; ties go to the smallest `t`.
pub fn scan_interval(
    design: &FeatureDesign,
    interval: Segment,
    rule: &LambdaRule,
    margin: usize,
) -> Result<Option<ScanResult>> {
    let curve = w_curve(design, interval, rule, margin)?;
    let mut best: Option<(usize, f64)> = None;
    for (t, w) in curve {
        match best {
            Some((_, bw)) if w <= bw => {}
            _ => best = Some((t, w)),
        }
    }
    Ok(best.map(|(t, w)| ScanResult {
        interval,
        argmax_b: t,
        max_value_a: w,
    }))
}

/// `Ŵ_t^{s,e}` from three cached segment fits.
pub fn w_stat(
    design: &FeatureDesign,
    s: usize,
    t: usize,
    e: usize,
    rule: &LambdaRule,
    cache: &RssCache,
    min_fit_len: usize,
) -> Result<f64> {
    if !(s < t && t < e) || e > design.len() {
        return Err(FrbsError::invalid(format!(
            "w_stat needs s < t < e <= n; got ({s}, {t}, {e})"
        )));
    }
    for (a, b) in [(s, t), (t, e)] {
        if b - a < min_fit_len {
            return Err(FrbsError::SegmentTooShort {
                start: a,
                end: b,
                min_len: min_fit_len,
            });
        }
    }
    let whole = segment_rss(design, Segment { start: s, end: e }, rule, cache)?;
    let left = segment_rss(design, Segment { start: s, end: t }, rule, cache)?;
    let right = segment_rss(design, Segment { start: t, end: e }, rule, cache)?;
    Ok(whole - left - right)
}

/// Population statistic for a single change at `eta` in `(s, e)`:
/// `(t-s)(e-t)/(e-s) Σ[β*_(s,t] - β*_(t,e], same]` with segment-averaged
/// slopes.
#[allow(clippy::too_many_arguments)]
pub fn population_w(
    beta_left: &GridFunction,
    beta_right: &GridFunction,
    cov: &CovarianceOperator,
    s: usize,
    t: usize,
    e: usize,
    eta: usize,
) -> f64 {
    debug_assert!(s < t && t < e);
    let (sf, tf, ef, ef_eta) = (s as f64, t as f64, e as f64, eta as f64);
    let mix = |w_left: f64, w_right: f64| -> Vec<f64> {
        let total = w_left + w_right;
        beta_left
            .values()
            .iter()
            .zip(beta_right.values())
            .map(|(l, r)| l + w_right / total * (r - l))
            .collect()
    };
    // β*_(s,t]
    let avg_left = if t <= eta {
        beta_left.values().to_vec()
    } else {
        mix(ef_eta - sf, tf - ef_eta)
    };
    // β*_(t,e]
    let avg_right = if t >= eta {
        beta_right.values().to_vec()
    } else {
        mix(ef_eta - tf, ef - ef_eta)
    };
    let diff: Vec<f64> = avg_left.iter().zip(&avg_right).map(|(a, b)| a - b).collect();
    (tf - sf) * (ef - tf) / (ef - sf) * cov.quad_form(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_counts() {
        assert_eq!(layer_count(200, 20), 5);
        assert_eq!(layer_count(200, 199), 2);
        assert_eq!(layer_count(128, 16), 4);
        assert_eq!(layer_count(256, 25), 5);
        assert_eq!(layer_count(200, 100), 2);
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(seeded_intervals(200, 200).is_err());
        assert!(seeded_intervals(200, 0).is_err());
        assert!(seeded_intervals(200, 250).is_err());
        let set = seeded_intervals(200, 199).unwrap();
        assert_eq!(set.layer_count(), 2);
    }

    #[test]
    fn first_layers_for_200() {
        let set = seeded_intervals(200, 20).unwrap();
        assert_eq!(set.layer_count(), 5);
        assert_eq!(set.layers()[0], vec![Segment { start: 0, end: 200 }]);
        assert_eq!(
            set.layers()[1],
            vec![
                Segment { start: 0, end: 100 },
                Segment { start: 50, end: 150 },
                Segment { start: 100, end: 200 },
            ]
        );
        assert_eq!(set.count() + set.dropped(), 57);
    }

    #[test]
    fn split_range_margins() {
        let seg = Segment { start: 0, end: 25 };
        assert_eq!(split_range(seg, 10), Some(10..=15));
        assert_eq!(split_range(Segment { start: 0, end: 19 }, 10), None);
    }
}
