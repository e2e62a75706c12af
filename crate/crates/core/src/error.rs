// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrbsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The penalized normal equations could not be solved.
    #[error("singular system (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    /// A fit was requested on a segment shorter than the configured minimum.
    /// Callers in the scan treat this as "skip", not as a failure.
    #[error("segment ({start}, {end}] shorter than minimum fit length {min_len}")]
    SegmentTooShort {
        start: usize,
        end: usize,
        min_len: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("tuning failed: {0}")]
    TuningFailed(String),
}

impl FrbsError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, FrbsError>;
