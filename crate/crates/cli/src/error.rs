// SPDX-License-Identifier: MIT OR Apache-2.0

use frbs_core::FrbsError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or unreadable input; exit code 2.
    #[error("input error: {0}")]
    Input(String),
    /// The pipeline ran and failed; exit code 1.
    #[error("pipeline error: {0}")]
    Pipeline(#[from] FrbsError),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Pipeline(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
