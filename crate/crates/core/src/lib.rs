// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multiple change-point detection in the slope of a scalar-on-function
//! linear regression time series.
//!
//! The pipeline scans seeded intervals with a penalized-regression
//! likelihood-ratio statistic, keeps the narrowest intervals whose statistic
//! exceeds a threshold, refines each estimate locally, and attaches a
//! Monte-Carlo confidence interval built from a block long-run variance
//! estimate.

#![forbid(unsafe_code)]

pub mod detect;
pub mod error;
pub mod evaluate;
pub mod fgrid;
pub mod inference;
pub mod kernel;
pub mod pipeline;
pub mod regress;
pub mod segment;
pub mod series;
pub mod simulate;

pub use detect::{frbs, refine, refined_interval, DetectorConfig, PreliminarySet, RefinedChangePoint};
pub use error::{FrbsError, Result};
pub use evaluate::{cross_validate, detection_summary, hausdorff, CvGrid, EvalReport};
pub use fgrid::{inner_l2, make_grid, Grid, GridFunction};
pub use kernel::{sobolev_kernel, Kernel, KernelMatrix, SobolevKernel};
pub use pipeline::{ChangePointReport, ChangeSummary, Pipeline};
pub use regress::{FeatureDesign, LambdaRule, SegmentFit};
pub use segment::{seeded_intervals, SeededIntervalSet};
pub use series::{FunctionalSeries, Segment};
pub use simulate::{generate, scenario_presets, GroundTruth, ScenarioSpec};
