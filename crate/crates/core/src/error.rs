// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar or structural argument violated its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Vector lengths disagree with the configured region count.
    #[error("dimension mismatch: expected {expected} regions, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An update was applied out of time order.
    #[error("time mismatch: state is at day {state}, batch is for day {batch}")]
    TimeMismatch { state: u64, batch: u64 },

    /// Brute-force enumeration refused an instance above its guard rails.
    #[error(
        "instance too large to enumerate: {regions} regions, budget {budget} \
         (limits: {max_regions} regions, budget {max_budget})"
    )]
    InstanceTooLarge {
        regions: usize,
        budget: u32,
        max_regions: usize,
        max_budget: u32,
    },

    /// Threshold calibration could not bracket the target run length.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// Malformed input data; `row` is the 1-based data row (header excluded).
    #[error("{path}: row {row}: {reason}")]
    Data {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("{path}: {reason}")]
    DataFile { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
