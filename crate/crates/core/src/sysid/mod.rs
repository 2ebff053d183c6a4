//! Prediction-error identification of a second-order-plus-dead-time process model
//! `G(s) = Kp (1 + s Tz) / ((1 + s Tp1)(1 + s Tp2)) exp(-s Td)` and a first-order ARMA
//! noise model, plus the residual-analysis suite used for validation.

mod dataset;
mod diffeq;
mod estimate;
mod metrics;
mod model;
mod noise;

pub use dataset::{DatasetZN, Role};
pub use diffeq::{predict_one_step, DifferenceEquationModel};
pub use estimate::{
    default_delay_candidates, fit_process_model, fit_process_model_with, FitOptions, Focus,
};
pub use metrics::{
    compute_metrics, residual_analysis, residual_analysis_with_band, FitReport, ResidualReport,
    BAND_95, BAND_99,
};
pub use model::{model_to_tf, NoiseModel, ProcessModel};
pub use noise::{fit_noise_model, ljung_box};

use thiserror::Error;

use crate::kv::KvError;
use crate::linalg::LinalgError;
use crate::lti::LtiError;
use crate::signal::SignalError;

#[derive(Debug, Error)]
pub enum SysidError {
    #[error("invalid process model: {0}")]
    InvalidModel(String),
    #[error("input and output records differ in {0}")]
    Mismatch(&'static str),
    #[error("dataset is not detrended: |mean({signal})| = {mean:e} exceeds tolerance")]
    NotDetrended { signal: &'static str, mean: f64 },
    #[error("no delay candidates given")]
    NoDelayCandidates,
    #[error("index {index} out of range (need {min} <= t < {len})")]
    OutOfRange {
        index: usize,
        min: usize,
        len: usize,
    },
    #[error("record too short: N = {n} must exceed {d}")]
    TooShort { n: usize, d: usize },
    #[error("estimation did not converge after {iterations} iterations (best cost {best_cost:e})")]
    NonConvergence {
        iterations: usize,
        best_cost: f64,
        best: Box<(ProcessModel<f64>, FitReport<f64>)>,
    },
    #[error("first-order ARMA noise model cannot whiten the residuals (Ljung-Box Q = {q:.1} > {critical:.1})")]
    NoiseModelInsufficient { q: f64, critical: f64 },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("model file {0}")]
    File(#[from] KvError),
}
