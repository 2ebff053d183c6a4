//! Pre-processing of sampled records: detrending, FIR smoothing, correlation analysis,
//! autoregressive prewhitening and Welch spectra.

mod ar;
mod corr;
mod dataset;
mod fir;
mod psd;
mod record;

pub use ar::{ar_fit, prewhiten, ArWhitener};
pub use corr::{acf, ccf, CorrelationSeries};
pub use dataset::{read_dataset_csv, write_dataset_csv};
pub use fir::{fir_filter, moving_average, FirFilter};
pub use psd::{psd_welch, PowerSpectrum};
pub use record::{remove_linear_trend, remove_mean, DetrendResult, SignalRecord};

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("empty signal")]
    Empty,
    #[error("signal too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("sample interval must be finite and > 0, got {0}")]
    InvalidDt(f64),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("FIR coefficient list is empty")]
    EmptyCoefficients,
    #[error("signal lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("sample intervals differ ({0} vs {1})")]
    DtMismatch(f64, f64),
    #[error("zero variance: correlation is undefined for a constant signal")]
    ZeroVariance,
    #[error("max lag {max_lag} must be below the record length {len}")]
    MaxLag { max_lag: usize, len: usize },
    #[error("AR order must be >= 1")]
    ZeroOrder,
    #[error("rank-deficient regressor: {0}")]
    RankDeficient(#[from] LinalgError),
    #[error("segment length {segment} exceeds record length {len}")]
    SegmentTooLong { segment: usize, len: usize },
    #[error("invalid Welch parameters: {0}")]
    InvalidWelch(String),
    #[error("dataset line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
