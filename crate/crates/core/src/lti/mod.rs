//! Continuous-time SISO transfer functions with transport delay.

mod expr;
mod pade;
mod realize;
mod response;
mod tf;

pub use expr::LoopExpr;
pub use pade::pade_delay;
pub use realize::CanonicalRealization;
pub use response::{
    freq_response, log_grid, lsim, step_metrics, step_response, FrequencyResponse, StepMetrics,
    TimeSeries,
};
pub use tf::{feedback_unity, series, tf_to_zpk, StabilityReport, TransferFunction, ZpkModel};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::ode::NonFiniteDerivative;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtiError {
    #[error("denominator must be nonempty with a nonzero leading coefficient")]
    InvalidDenominator,
    #[error("transport delay must be finite and >= 0, got {0}")]
    InvalidDelay(f64),
    #[error(
        "improper transfer function (numerator degree {num_degree} > denominator degree {den_degree}); add a derivative filter to make it realizable"
    )]
    Improper {
        num_degree: usize,
        den_degree: usize,
    },
    #[error("open loop carries a {0} s transport delay; substitute a Pade approximant before rational closure")]
    DelayNotRationalized(f64),
    #[error("Pade approximant needs delay > 0 and order >= 1 (delay {delay}, order {order})")]
    InvalidPade { delay: f64, order: usize },
    #[error("transfer function has a pole on the imaginary axis at omega = {omega} rad/s")]
    PoleOnAxis { omega: f64 },
    #[error("frequency grid must be strictly increasing and nonnegative")]
    InvalidGrid,
    #[error("no steady state: response does not settle within the final 10% of the record")]
    NoSteadyState,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("delays of parallel branches differ ({0} s vs {1} s)")]
    DelayMismatch(f64, f64),
    #[error(transparent)]
    Roots(#[from] LinalgError),
    #[error(transparent)]
    Integration(#[from] NonFiniteDerivative),
}
