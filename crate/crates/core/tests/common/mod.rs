// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent reference computations and fixtures shared by the
//! integration tests. Nothing here calls into the solver paths under test.

#![allow(dead_code, clippy::needless_range_loop)]

use frbs_core::simulate::{generate, scenario_presets, GroundTruth};
use frbs_core::{FunctionalSeries, Segment};

/// Sobolev kernel written out directly, no shared code with the library.
pub fn kernel_value(s: f64, t: f64) -> f64 {
    let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
    lo.cosh() * (1.0 - hi).cosh() / 1f64.sinh()
}

/// Trapezoid weights on `p` equispaced nodes of [0, 1].
pub fn trapezoid(p: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / (p - 1) as f64;
    let nodes = (0..p).map(|i| i as f64 * h).collect();
    let weights = (0..p)
        .map(|i| if i == 0 || i == p - 1 { h / 2.0 } else { h })
        .collect();
    (nodes, weights)
}

/// Gram entries by explicit double quadrature.
pub fn naive_gram(series: &FunctionalSeries, seg: Segment) -> Vec<Vec<f64>> {
    let p = series.grid().len();
    let (nodes, w) = trapezoid(p);
    let m = seg.len();
    let mut out = vec![vec![0.0; m]; m];
    for a in 0..m {
        let xa = series.curve(seg.start + a);
        for b in 0..m {
            let xb = series.curve(seg.start + b);
            let mut total = 0.0;
            for u in 0..p {
                let mut inner = 0.0;
                for v in 0..p {
                    inner += w[v] * kernel_value(nodes[u], nodes[v]) * xb[v];
                }
                total += w[u] * xa[u] * inner;
            }
            out[a][b] = total;
        }
    }
    out
}

/// `Q(t)` recomputed from scratch for one `t`.
pub fn direct_q(
    series: &FunctionalSeries,
    s: usize,
    t: usize,
    e: usize,
    left: &[f64],
    right: &[f64],
) -> f64 {
    let (_, w) = trapezoid(series.grid().len());
    let pred = |row: usize, beta: &[f64]| -> f64 {
        series.curve(row).iter().zip(beta).zip(&w).map(|((x, b), wt)| x * b * wt).sum()
    };
    let mut q = 0.0;
    for row in s..t {
        let r = series.responses()[row] - pred(row, left);
        q += r * r;
    }
    for row in t..e {
        let r = series.responses()[row] - pred(row, right);
        q += r * r;
    }
    q
}

/// Seeded intervals by the printed floating-point recipe: layer `k` has
/// `2^k - 1` candidates `[⌈(i-1) n/2^k⌉, ⌊(i-1) n/2^k + n/2^{k-1}⌋]`.
/// Degenerate ones are dropped, consecutive duplicates merged.
pub fn hand_enumeration(n: usize, delta: usize) -> Vec<Vec<(usize, usize)>> {
    let layers = ((n as f64 / delta as f64).log2().ceil() as usize) + 1;
    (1..=layers)
        .map(|k| {
            let len = n as f64 / 2f64.powi(k as i32 - 1);
            let shift = n as f64 / 2f64.powi(k as i32);
            let mut layer: Vec<(usize, usize)> = Vec::new();
            for i in 1..(1usize << k) {
                let s = ((i - 1) as f64 * shift).ceil() as usize;
                let e = ((i - 1) as f64 * shift + len).floor() as usize;
                if e > s + 1 && layer.last() != Some(&(s, e)) {
                    layer.push((s, e));
                }
            }
            layer
        })
        .collect()
}

/// Scaled Hausdorff distance by exhaustive pairwise comparison.
pub fn brute_hausdorff(est: &[usize], truth: &[usize], n: usize) -> f64 {
    let mut a: Vec<f64> = vec![1.0];
    a.extend(est.iter().map(|&v| v as f64));
    a.push(n as f64 + 1.0);
    let mut b: Vec<f64> = vec![0.0];
    b.extend(truth.iter().map(|&v| v as f64));
    b.push(n as f64);
    let mut worst = 0.0f64;
    for x in &a {
        let mut best = f64::INFINITY;
        for y in &b {
            best = best.min((x - y).abs());
        }
        worst = worst.max(best);
    }
    for y in &b {
        let mut best = f64::INFINITY;
        for x in &a {
            best = best.min((x - y).abs());
        }
        worst = worst.max(best);
    }
    worst / n as f64
}

/// Scenario data with the noise removed: `y_j = ⟨X_j, β*_j⟩`.
pub fn noiseless(name: &str, n: usize, c_beta: f64, seed: u64) -> (FunctionalSeries, GroundTruth) {
    let spec = scenario_presets(name, n, c_beta, seed).unwrap();
    let (series, truth) = generate(&spec).unwrap();
    let (_, w) = trapezoid(series.grid().len());
    let mut regime = 0;
    let y: Vec<f64> = (0..n)
        .map(|j| {
            while regime < truth.change_points.len() && j + 1 > truth.change_points[regime] {
                regime += 1;
            }
            let beta = truth.slope_segments[regime].values();
            series.curve(j).iter().zip(beta).zip(&w).map(|((x, b), wt)| x * b * wt).sum()
        })
        .collect();
    (series.with_responses(y).unwrap(), truth)
}

/// Small deterministic pseudo-random stream for fixtures (64-bit LCG).
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        self.0 >> 11
    }

    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 42) as f64
    }
}
