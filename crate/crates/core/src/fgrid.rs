// SPDX-License-Identifier: MIT OR Apache-2.0

//! Functions sampled on an evenly spaced grid over `[0, 1]`.
//!
//! Every L² inner product in the crate goes through the trapezoid weights
//! stored on [`Grid`], so Gram matrices, covariance quadratic forms and
//! predictions all share one quadrature rule.

use serde::{Deserialize, Serialize};

use crate::error::{FrbsError, Result};

/// Evenly spaced nodes on `[0, 1]` with trapezoid weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Builds a grid of `p >= 2` nodes including both endpoints.
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(FrbsError::invalid(format!(
                "grid needs at least 2 nodes; got {p}"
            )));
        }
        let h = 1.0 / (p - 1) as f64;
        let nodes = (0..p)
            .map(|i| if i == p - 1 { 1.0 } else { i as f64 * h })
            .collect();
        let mut weights = vec![h; p];
        weights[0] = h / 2.0;
        weights[p - 1] = h / 2.0;
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            values: self.nodes.iter().map(|&t| f(t)).collect(),
        }
    }

    /// Quadrature of `Σ_i w_i a_i b_i` for raw slices of grid length.
    ///
    /// Summation runs in node order, so swapping the arguments gives a
    /// bit-identical result.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * (x * y))
            .sum()
    }

    pub(crate) fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len() {
            return Err(FrbsError::invalid(format!(
                "{what} has {len} values but the grid has {} nodes",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Shorthand for [`Grid::new`].
pub fn make_grid(p: usize) -> Result<Grid> {
    Grid::new(p)
}

/// A function represented by its values at the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FrbsError::invalid(format!(
                "grid function value at node {i} is not finite"
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            values: vec![0.0; p],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Pointwise `self - other`. Lengths must agree.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(FrbsError::invalid(format!(
                "grid function lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

/// `⟨f, g⟩_{L²}` by trapezoid quadrature.
pub fn inner_l2(f: &GridFunction, g: &GridFunction, grid: &Grid) -> Result<f64> {
    grid.check_len(f.len(), "left operand")?;
    grid.check_len(g.len(), "right operand")?;
    Ok(grid.dot(&f.values, &g.values))
}
