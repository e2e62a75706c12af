// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic functional regression series with known change points.
//!
//! Covariates are `X_j = Σ_{m=1}^{M} ζ_m Z_{m,j} φ_m` with cosine
//! eigenfunctions, `ζ_m = (-1)^{m+1}/m`, and independent unit-variance AR(1)
//! scores. Slopes alternate between
//!
//! ```text
//! β⁰ = 4 Σ (-1)^{m+1} m⁻⁴ φ_m      β¹ = (4 - c_β) Σ (-1)^{m+1} m⁻² φ_m
//! ```
//!
//! at each change point, and `y_j = ⟨X_j, β*_j⟩ + ε_j` with standard normal
//! noise.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FrbsError, Result};
use crate::fgrid::{Grid, GridFunction};
use crate::series::FunctionalSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    pub change_points: Vec<usize>,
    pub c_beta: f64,
    pub ar_coeff: f64,
    pub n_terms: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(FrbsError::invalid("scenario needs n >= 1"));
        }
        if self.n_terms == 0 {
            return Err(FrbsError::invalid("scenario needs at least one term"));
        }
        if self.ar_coeff.is_nan() || self.ar_coeff.abs() >= 1.0 {
            return Err(FrbsError::invalid(format!(
                "AR coefficient must satisfy |a| < 1; got {}",
                self.ar_coeff
            )));
        }
        if !self.c_beta.is_finite() {
            return Err(FrbsError::invalid("c_beta must be finite"));
        }
        let mut prev = 0;
        for &c in &self.change_points {
            if c <= prev || c >= self.n {
                return Err(FrbsError::invalid(format!(
                    "change points must be strictly increasing inside (0, {}); got {:?}",
                    self.n, self.change_points
                )));
            }
            prev = c;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub change_points: Vec<usize>,
    /// Slopes of consecutive regimes, alternating `β⁰, β¹, β⁰, ...`.
    pub slope_segments: Vec<GridFunction>,
    pub kappa_sq_true: Vec<f64>,
}

/// `φ_1 = 1`, `φ_{m+1}(t) = √2 cos(mπt)`.
pub fn eigenfunction(m: usize, grid: &Grid) -> Result<GridFunction> {
    if m == 0 {
        return Err(FrbsError::invalid("eigenfunction index starts at 1"));
    }
    Ok(if m == 1 {
        grid.sample(|_| 1.0)
    } else {
        let freq = (m - 1) as f64 * PI;
        grid.sample(|t| SQRT_2 * (freq * t).cos())
    })
}

fn sign(m: usize) -> f64 {
    if m % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `ζ_m = (-1)^{m+1} / m`.
pub fn score_scale(m: usize) -> f64 {
    sign(m) / m as f64
}

/// Coefficients of `β⁰` and `β¹` on `φ_m`.
pub fn slope_coefficients(m: usize, c_beta: f64) -> (f64, f64) {
    let mf = m as f64;
    (4.0 * sign(m) * mf.powi(-4), (4.0 - c_beta) * sign(m) * mf.powi(-2))
}

/// `Σ_m ζ_m² (b⁰_m - b¹_m)²`, the jump size under the generating covariance.
pub fn kappa_sq(c_beta: f64, n_terms: usize) -> f64 {
    (1..=n_terms)
        .map(|m| {
            let (b0, b1) = slope_coefficients(m, c_beta);
            let z = score_scale(m);
            z * z * (b0 - b1) * (b0 - b1)
        })
        .sum()
}

fn slope_function(basis: &[GridFunction], which: usize, c_beta: f64) -> GridFunction {
    let p = basis[0].len();
    let mut values = vec![0.0; p];
    for (idx, phi) in basis.iter().enumerate() {
        let (b0, b1) = slope_coefficients(idx + 1, c_beta);
        let coef = if which == 0 { b0 } else { b1 };
        for (v, f) in values.iter_mut().zip(phi.values()) {
            *v += coef * f;
        }
    }
    GridFunction::new(values).expect("finite")
}

/// Draws a dataset. Deterministic in `spec.seed`.
///
/// Random draws happen in a fixed order: for each term `m`, the stationary
/// start `Z_{m,0}` and then `n` innovations; afterwards `n` noise values.
pub fn generate(spec: &ScenarioSpec) -> Result<(FunctionalSeries, GroundTruth)> {
    spec.validate()?;
    let grid = Grid::new(spec.p)?;
    let basis: Vec<GridFunction> = (1..=spec.n_terms)
        .map(|m| eigenfunction(m, &grid))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = spec.ar_coeff;
    let innov = (1.0 - a * a).sqrt();

    let n = spec.n;
    let p = spec.p;
    let mut curves = vec![vec![0.0; p]; n];
    for (idx, phi) in basis.iter().enumerate() {
        let zeta = score_scale(idx + 1);
        let mut z: f64 = rng.sample(StandardNormal);
        for curve in curves.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            z = a * z + innov * e;
            let scale = zeta * z;
            for (c, f) in curve.iter_mut().zip(phi.values()) {
                *c += scale * f;
            }
        }
    }

    let slopes = [
        slope_function(&basis, 0, spec.c_beta),
        slope_function(&basis, 1, spec.c_beta),
    ];
    let mut regime = 0;
    let mut next_change = spec.change_points.iter().peekable();
    let mut responses = Vec::with_capacity(n);
    for (j, curve) in curves.iter().enumerate() {
        // time index j + 1; regime switches after each change point
        while next_change.peek().is_some_and(|&&c| j + 1 > c) {
            regime += 1;
            next_change.next();
        }
        let eps: f64 = rng.sample(StandardNormal);
        responses.push(grid.dot(curve, slopes[regime % 2].values()) + eps);
    }

    let segments = (0..=spec.change_points.len())
        .map(|k| slopes[k % 2].clone())
        .collect();
    let kappa = kappa_sq(spec.c_beta, spec.n_terms);
    let truth = GroundTruth {
        change_points: spec.change_points.clone(),
        slope_segments: segments,
        kappa_sq_true: vec![kappa; spec.change_points.len()],
    };
    Ok((FunctionalSeries::new(grid, responses, curves)?, truth))
}

/// Preset designs: `S1` has one change at `n/2`; `S2` has changes at `n/4`
/// and `5n/8`. Both use `p = 200`, AR coefficient 0.3 and 50 terms.
pub fn scenario_presets(name: &str, n: usize, c_beta: f64, seed: u64) -> Result<ScenarioSpec> {
    let change_points = match name {
        "S1" | "s1" => vec![n / 2],
        "S2" | "s2" => vec![n / 4, 5 * n / 8],
        other => {
            return Err(FrbsError::invalid(format!(
                "unknown scenario '{other}' (expected S1 or S2)"
            )))
        }
    };
    let spec = ScenarioSpec {
        n,
        p: 200,
        change_points,
        c_beta,
        ar_coeff: 0.3,
        n_terms: 50,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}
