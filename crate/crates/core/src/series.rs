// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{FrbsError, Result};
use crate::fgrid::{Grid, GridFunction};

/// Half-open index segment `(start, end]` over time indices `1..=n`.
///
/// Index `j` of the segment refers to the 1-based time point; the
/// corresponding 0-based row is `j - 1`, so the rows covered are
/// `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(FrbsError::invalid(format!(
                "empty segment ({start}, {end}]"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// 0-based row range.
    pub fn rows(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    /// `(start, end] ⊆ (outer.start, outer.end]`.
    pub fn within(&self, outer: &Segment) -> bool {
        outer.start <= self.start && self.end <= outer.end
    }
}

impl std::fmt::Display for Segment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}]", self.start, self.end)
    }
}

/// `n` scalar responses paired with `n` curves sampled on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSeries {
    grid: Grid,
    responses: Vec<f64>,
    /// Row-major `n x p`.
    curves: Vec<f64>,
}

impl FunctionalSeries {
    pub fn new(grid: Grid, responses: Vec<f64>, curves: Vec<Vec<f64>>) -> Result<Self> {
        if responses.len() != curves.len() {
            return Err(FrbsError::invalid(format!(
                "{} responses but {} curves",
                responses.len(),
                curves.len()
            )));
        }
        if let Some(j) = responses.iter().position(|v| !v.is_finite()) {
            return Err(FrbsError::invalid(format!("response {j} is not finite")));
        }
        let p = grid.len();
        let mut flat = Vec::with_capacity(curves.len() * p);
        for (j, c) in curves.iter().enumerate() {
            grid.check_len(c.len(), &format!("curve {j}"))?;
            if c.iter().any(|v| !v.is_finite()) {
                return Err(FrbsError::invalid(format!("curve {j} has non-finite values")));
            }
            flat.extend_from_slice(c);
        }
        Ok(Self {
            grid,
            responses,
            curves: flat,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    /// Curve at 0-based row `row`.
    pub fn curve(&self, row: usize) -> &[f64] {
        let p = self.grid.len();
        &self.curves[row * p..(row + 1) * p]
    }

    pub fn curve_function(&self, row: usize) -> GridFunction {
        GridFunction::new(self.curve(row).to_vec()).expect("validated on construction")
    }

    pub fn full_segment(&self) -> Segment {
        Segment {
            start: 0,
            end: self.len(),
        }
    }

    pub fn check_segment(&self, seg: &Segment) -> Result<()> {
        if seg.is_empty() || seg.end > self.len() {
            return Err(FrbsError::invalid(format!(
                "segment {seg} invalid for series of length {}",
                self.len()
            )));
        }
        Ok(())
    }

    /// Rows selected by `rows` (0-based), in order.
    pub fn select(&self, rows: impl IntoIterator<Item = usize>) -> Self {
        let p = self.grid.len();
        let mut responses = Vec::new();
        let mut curves = Vec::new();
        for r in rows {
            responses.push(self.responses[r]);
            curves.extend_from_slice(&self.curves[r * p..(r + 1) * p]);
        }
        Self {
            grid: self.grid.clone(),
            responses,
            curves,
        }
    }

    /// Same curves, different responses.
    pub fn with_responses(&self, responses: Vec<f64>) -> Result<Self> {
        if responses.len() != self.len() {
            return Err(FrbsError::invalid("response length mismatch"));
        }
        Ok(Self {
            grid: self.grid.clone(),
            responses,
            curves: self.curves.clone(),
        })
    }
}
