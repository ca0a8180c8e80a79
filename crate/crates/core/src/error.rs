use thiserror::Error;

use crate::engine::PathRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown space tag `{0}` (expected U, H, V, Hstar or Hbar)")]
    UnknownSpace(String),

    #[error("time {t} lies beyond the path grid (end {end})")]
    OffGrid { t: f64, end: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("noise index {index} out of range for {count} noise modes")]
    NoiseIndex { index: usize, count: usize },

    #[error("unknown assumption id `{0}`")]
    UnknownAssumption(String),

    #[error("non-finite coefficients at t = {time}")]
    Blowup {
        time: f64,
        /// The record up to the last finite state, flagged with the blow-up time.
        partial: Option<Box<PathRecord>>,
    },

    #[error("spectrum file line {line}: {message}")]
    SpectrumFile { line: usize, message: String },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
