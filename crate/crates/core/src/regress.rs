// SPDX-License-Identifier: MIT OR Apache-2.0

//! Penalized scalar-on-function regression on an index segment.
//!
//! For a segment of `m` observations the estimator minimizes
//!
//! ```text
//! (1/m) Σ_j (y_j - ⟨X_j, β⟩)² + λ ‖β‖²_{H(K)}
//! ```
//!
//! By the representer theorem `β = Σ_j c_j L_K X_j`, and the coefficients
//! solve `(M + mλI) c = y` with `M` the segment Gram matrix. That route is
//! [`fit_slope`].
//!
//! The change-point scan needs thousands of fits, so [`FeatureDesign`] solves
//! the same problem in the primal: with `F = A W L` (curves times weights
//! times a kernel square root) the Gram matrix is `F Fᵀ`, and a thin SVD of
//! `F` gives an `r`-column feature matrix `G` with `G Gᵀ = M` for every
//! segment, where `r ≤ min(n, p)` is the numerical rank. Each fit is then an
//! `r x r` ridge system.

use std::num::NonZeroUsize;
use std::sync::Mutex;

use lru::LruCache;
use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{FrbsError, Result};
use crate::fgrid::{Grid, GridFunction};
use crate::kernel::{GramMatrix, KernelMatrix};
use crate::series::{FunctionalSeries, Segment};

/// Singular values of the feature matrix below this fraction of the largest
/// are dropped.
const RANK_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_CACHE_CAPACITY: usize = 512;

/// How the penalty `λ` depends on the segment length `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaRule {
    /// The same `λ` for every segment.
    Constant { lambda: f64 },
    /// `λ_m = ω m^{-2r/(2r+1)}`.
    Rate { omega: f64, smoothness: f64 },
}

impl LambdaRule {
    pub fn constant(lambda: f64) -> Self {
        Self::Constant { lambda }
    }

    pub fn lambda(&self, m: usize) -> f64 {
        match *self {
            Self::Constant { lambda } => lambda,
            Self::Rate { omega, smoothness } => {
                let r = smoothness;
                omega * (m as f64).powf(-2.0 * r / (2.0 * r + 1.0))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Constant { lambda } => lambda.is_finite() && lambda >= 0.0,
            Self::Rate { omega, smoothness } => {
                omega.is_finite() && omega >= 0.0 && smoothness.is_finite() && smoothness > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(FrbsError::invalid(format!("invalid lambda rule {self:?}")))
        }
    }
}

impl Default for LambdaRule {
    fn default() -> Self {
        Self::Constant { lambda: 0.3 }
    }
}

/// Result of the representer-theorem fit on one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    pub segment: Segment,
    pub lambda: f64,
    /// Representer coefficients `c`, one per observation in the segment.
    pub coeffs: Vec<f64>,
    /// `β̂` at the grid nodes.
    pub slope: GridFunction,
    /// `M c`, i.e. `⟨X_j, β̂⟩` for each in-segment `j`.
    pub fitted: Vec<f64>,
    pub rss: f64,
    /// Set when `λ = 0` forced a pseudo-inverse solve.
    pub pseudo_inverse: bool,
}

impl SegmentFit {
    /// `(1/m) rss + λ cᵀ M c`.
    pub fn objective(&self, gram: &GramMatrix) -> f64 {
        let c = DVector::from_column_slice(&self.coeffs);
        let penalty = c.dot(&(&gram.entries * &c));
        self.rss / self.coeffs.len() as f64 + self.lambda * penalty
    }

    /// `‖(M + mλI) c - y‖`.
    pub fn normal_residual(&self, gram: &GramMatrix, y_seg: &[f64]) -> f64 {
        let m = self.coeffs.len();
        let c = DVector::from_column_slice(&self.coeffs);
        let mut lhs = &gram.entries * &c;
        lhs.axpy(m as f64 * self.lambda, &c, 1.0);
        (lhs - DVector::from_column_slice(y_seg)).norm()
    }
}

fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `(M + mλI) c = y_seg` and assembles the fitted slope.
///
/// `λ > 0` uses a Cholesky factorization. `λ = 0` falls back to a
/// pseudo-inverse and flags the fit; if the system is then inconsistent the
/// call fails with [`FrbsError::SingularSystem`].
pub fn fit_slope(
    series: &FunctionalSeries,
    segment: Segment,
    lambda: f64,
    gram: &GramMatrix,
    kmat: &KernelMatrix,
) -> Result<SegmentFit> {
    series.check_segment(&segment)?;
    if gram.segment != segment {
        return Err(FrbsError::invalid(format!(
            "gram built for {} but fit requested on {segment}",
            gram.segment
        )));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(FrbsError::invalid(format!("lambda must be >= 0; got {lambda}")));
    }
    let m = segment.len();
    let y_seg = &series.responses()[segment.rows()];
    let y = DVector::from_column_slice(y_seg);

    let mut system = gram.entries.clone();
    for i in 0..m {
        system[(i, i)] += m as f64 * lambda;
    }

    let (coeffs, pseudo_inverse) = if lambda > 0.0 {
        match system.clone().cholesky() {
            Some(chol) => (chol.solve(&y), false),
            None => {
                return Err(FrbsError::SingularSystem {
                    condition: condition_estimate(&system),
                })
            }
        }
    } else {
        let svd = SVD::new(system.clone(), true, true);
        let smax = svd.singular_values.max();
        let c = svd
            .solve(&y, smax * 1e-12)
            .map_err(|e| FrbsError::invalid(e.to_string()))?;
        (c, true)
    };

    let residual = (&system * &coeffs - &y).norm();
    if residual > 1e-8 * y.norm().max(f64::MIN_POSITIVE) && y.norm() > 0.0 {
        return Err(FrbsError::SingularSystem {
            condition: condition_estimate(&system),
        });
    }

    let fitted_v = &gram.entries * &coeffs;
    let fitted: Vec<f64> = fitted_v.iter().copied().collect();
    let rss = y_seg
        .iter()
        .zip(&fitted)
        .map(|(yj, fj)| (yj - fj) * (yj - fj))
        .sum();

    // β = K W Σ_j c_j X_j
    let p = series.grid().len();
    let mut combo = vec![0.0; p];
    for (i, cj) in coeffs.iter().enumerate() {
        for (acc, x) in combo.iter_mut().zip(series.curve(segment.start + i)) {
            *acc += cj * x;
        }
    }
    let slope = GridFunction::new(kmat.smooth(&combo))?;

    Ok(SegmentFit {
        segment,
        lambda,
        coeffs: coeffs.iter().copied().collect(),
        slope,
        fitted,
        rss,
        pseudo_inverse,
    })
}

/// `⟨x_new, β̂⟩`.
pub fn predict(fit: &SegmentFit, x_new: &GridFunction, grid: &Grid) -> Result<f64> {
    crate::fgrid::inner_l2(x_new, &fit.slope, grid)
}

/// Reduced-rank primal form of the segment regression problem.
#[derive(Debug, Clone)]
pub struct FeatureDesign {
    n: usize,
    rank: usize,
    /// Row-major `n x rank`.
    features: Vec<f64>,
    /// `p x rank`: maps reduced coefficients to slope values on the grid.
    slope_map: DMatrix<f64>,
    responses: Vec<f64>,
}

/// Reduced-form fit: coefficients in feature space plus the RSS.
#[derive(Debug, Clone)]
pub struct ReducedFit {
    pub theta: DVector<f64>,
    pub rss: f64,
}

impl FeatureDesign {
    pub fn new(series: &FunctionalSeries, kmat: &KernelMatrix) -> Result<Self> {
        let n = series.len();
        let grid = series.grid();
        if grid.len() != kmat.grid().len() {
            return Err(FrbsError::invalid("series and kernel matrix use different grids"));
        }
        if n == 0 {
            return Err(FrbsError::invalid("empty series"));
        }
        let w = grid.weights();
        let p = w.len();
        let aw = DMatrix::from_fn(n, p, |i, u| series.curve(i)[u] * w[u]);
        let f = aw * kmat.factor();
        let svd = SVD::new(f, true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested Vᵀ");
        let sv = &svd.singular_values;
        let smax = sv.max();
        let mut keep: Vec<usize> = (0..sv.len())
            .filter(|&k| smax > 0.0 && sv[k] > RANK_TOLERANCE * smax)
            .collect();
        keep.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
        let rank = keep.len();

        let mut features = vec![0.0; n * rank];
        for i in 0..n {
            for (c, &k) in keep.iter().enumerate() {
                features[i * rank + c] = u[(i, k)] * sv[k];
            }
        }
        let mut v_r = DMatrix::zeros(p, rank);
        for (c, &k) in keep.iter().enumerate() {
            for row in 0..p {
                v_r[(row, c)] = v_t[(k, row)];
            }
        }
        let slope_map = kmat.factor() * v_r;
        Ok(Self {
            n,
            rank,
            features,
            slope_map,
            responses: series.responses().to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.rank..(i + 1) * self.rank]
    }

    /// Slope values on the grid for reduced coefficients `theta`.
    pub fn slope(&self, theta: &DVector<f64>) -> Vec<f64> {
        (&self.slope_map * theta).iter().copied().collect()
    }

    fn solve(&self, gram: &DMatrix<f64>, rhs: &DVector<f64>, shift: f64) -> DVector<f64> {
        let r = self.rank;
        let mut a = gram.clone();
        for i in 0..r {
            a[(i, i)] += shift;
        }
        if let Some(chol) = a.clone().cholesky() {
            return chol.solve(rhs);
        }
        let svd = SVD::new(a, true, true);
        let smax = svd.singular_values.max();
        svd.solve(rhs, smax * 1e-12)
            .unwrap_or_else(|_| DVector::zeros(r))
    }

    fn rss_rows(&self, rows: std::ops::Range<usize>, theta: &DVector<f64>) -> f64 {
        rows.map(|i| {
            let fit: f64 = self.row(i).iter().zip(theta.iter()).map(|(g, t)| g * t).sum();
            let e = self.responses[i] - fit;
            e * e
        })
        .sum()
    }

    fn accumulate(&self, gram: &mut DMatrix<f64>, rhs: &mut DVector<f64>, i: usize) {
        let g = self.row(i);
        let y = self.responses[i];
        let r = self.rank;
        for a in 0..r {
            let ga = g[a];
            rhs[a] += ga * y;
            for b in 0..r {
                gram[(a, b)] += ga * g[b];
            }
        }
    }

    /// Fits one segment with penalty `lambda`.
    pub fn fit(&self, segment: Segment, lambda: f64) -> Result<ReducedFit> {
        if segment.is_empty() || segment.end > self.n {
            return Err(FrbsError::invalid(format!(
                "segment {segment} invalid for series of length {}",
                self.n
            )));
        }
        let r = self.rank;
        let mut gram = DMatrix::zeros(r, r);
        let mut rhs = DVector::zeros(r);
        for i in segment.rows() {
            self.accumulate(&mut gram, &mut rhs, i);
        }
        let m = segment.len() as f64;
        let theta = self.solve(&gram, &rhs, m * lambda);
        let rss = self.rss_rows(segment.rows(), &theta);
        Ok(ReducedFit { theta, rss })
    }

    pub fn segment_rss(&self, segment: Segment, lambda: f64) -> Result<f64> {
        Ok(self.fit(segment, lambda)?.rss)
    }

    /// RSS of the left fit on `(s, t]` and the right fit on `(t, e]` for
    /// every `t` in `split_range`, each with `λ` from `rule` at its own
    /// length. Returned in increasing `t`.
    pub fn split_rss(
        &self,
        segment: Segment,
        rule: &LambdaRule,
        split_range: std::ops::RangeInclusive<usize>,
    ) -> Vec<(usize, f64, f64)> {
        let (lo, hi) = (*split_range.start(), *split_range.end());
        if lo > hi || lo <= segment.start || hi >= segment.end {
            return Vec::new();
        }
        let r = self.rank;
        let count = hi - lo + 1;
        let mut left = vec![0.0; count];
        let mut right = vec![0.0; count];

        let mut gram = DMatrix::zeros(r, r);
        let mut rhs = DVector::zeros(r);
        for i in segment.start..hi {
            self.accumulate(&mut gram, &mut rhs, i);
            let t = i + 1;
            if t >= lo {
                let m = t - segment.start;
                let theta = self.solve(&gram, &rhs, m as f64 * rule.lambda(m));
                left[t - lo] = self.rss_rows(segment.start..t, &theta);
            }
        }

        gram.fill(0.0);
        rhs.fill(0.0);
        for i in (lo..segment.end).rev() {
            self.accumulate(&mut gram, &mut rhs, i);
            let t = i;
            if t <= hi {
                let m = segment.end - t;
                let theta = self.solve(&gram, &rhs, m as f64 * rule.lambda(m));
                right[t - lo] = self.rss_rows(t..segment.end, &theta);
            }
        }

        (lo..=hi)
            .map(|t| (t, left[t - lo], right[t - lo]))
            .collect()
    }
}

/// LRU cache of segment RSS values keyed by `(start, end, λ)`.
#[derive(Debug)]
pub struct RssCache {
    inner: Mutex<LruCache<(usize, usize, u64), f64>>,
}

impl RssCache {
    pub fn new(capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity.max(1)).expect("nonzero");
        Self {
            inner: Mutex::new(LruCache::new(cap)),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for RssCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_CAPACITY)
    }
}

/// RSS of the fit on `segment` with `λ` from `rule`, served from `cache`
/// when present.
pub fn segment_rss(
    design: &FeatureDesign,
    segment: Segment,
    rule: &LambdaRule,
    cache: &RssCache,
) -> Result<f64> {
    let lambda = rule.lambda(segment.len());
    let key = (segment.start, segment.end, lambda.to_bits());
    if let Some(v) = cache.inner.lock().expect("cache lock").get(&key) {
        return Ok(*v);
    }
    let rss = design.segment_rss(segment, lambda)?;
    cache.inner.lock().expect("cache lock").put(key, rss);
    Ok(rss)
}
