//! Multi-coset sampling pattern design and cooperative compressive power
//! spectrum estimation.
//!
//! A network of sensor groups samples a wide-sense stationary signal at a
//! fraction of the Nyquist rate. Each group keeps `M` out of `N` sample
//! cosets according to a shared pattern, estimates the correlations between
//! its active cosets, and ships them to a fusion centre. When the modular
//! difference sets of the group patterns jointly cover all `N` integer
//! distances, the fusion centre recovers the full autocorrelation by least
//! squares and obtains the power spectrum with a `(2N-1)`-point DFT.
//!
//! Modules:
//! - [`ruler`]: circular sparse/Golomb ruler algebra over coset patterns.
//! - [`design`]: constructions that cover all distances with few patterns.
//! - [`system`]: the structural linear system and the LS reconstruction.
//! - [`estimator`]: compression and unbiased sample correlation estimates.
//! - [`sim`]: Monte-Carlo harness with fading channels and NMSE sweeps.
//! - [`io`]: text formats for banks, spectra, and sample streams.

pub mod design;
pub mod estimator;
pub mod io;
mod par;
pub mod ruler;
pub mod sim;
pub mod system;

use thiserror::Error;

/// Errors produced by pattern, design, reconstruction, and simulation code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid bank: {0}")]
    InvalidBank(String),
    #[error("need at least {min} marks per pattern, got {got}")]
    TooFewMarks { min: usize, got: usize },
    #[error("period N must be at least {min}, got {got}")]
    PeriodTooSmall { min: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("rank-deficient system, uncovered lags: {0:?}")]
    RankDeficient(Vec<usize>),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Caps the worker thread pool. A no-op without the `parallel` feature.
pub fn configure_threads(threads: usize) {
    par::configure_threads(threads);
}
