//! Identification, control design and closed-loop simulation for a pneumatic soft robot that
//! positions a patient's head under an overhead depth camera.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` and `*32` aliases
//! below name the common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod control;
pub mod kv;
pub mod linalg;
pub mod link;
pub mod lti;
pub mod ode;
pub mod poly;
mod scalar;
pub mod signal;
pub mod sim;
pub mod sysid;

pub use scalar::Scalar;

use thiserror::Error;

pub type TransferFunction64 = lti::TransferFunction<f64>;
pub type TransferFunction32 = lti::TransferFunction<f32>;
pub type SignalRecord64 = signal::SignalRecord<f64>;
pub type SignalRecord32 = signal::SignalRecord<f32>;
pub type ProcessModel64 = sysid::ProcessModel<f64>;
pub type ProcessModel32 = sysid::ProcessModel<f32>;
pub type DatasetZN64 = sysid::DatasetZN<f64>;
pub type DatasetZN32 = sysid::DatasetZN<f32>;
pub type LoopTopology64 = control::LoopTopology<f64>;
pub type LoopTopology32 = control::LoopTopology<f32>;
pub type SimConfig64 = sim::SimConfig<f64>;
pub type SimConfig32 = sim::SimConfig<f32>;
pub type SimTrace64 = sim::SimTrace<f64>;
pub type SimTrace32 = sim::SimTrace<f32>;

/// Any error raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lti(#[from] lti::LtiError),
    #[error(transparent)]
    Signal(#[from] signal::SignalError),
    #[error(transparent)]
    Sysid(#[from] sysid::SysidError),
    #[error(transparent)]
    Control(#[from] control::ControlError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Link(#[from] link::LinkError),
    #[error(transparent)]
    File(#[from] kv::KvError),
}

/// Coarse classification of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input, file or parameter.
    Validation,
    /// An algorithm failed on valid input.
    Numerical,
    /// Transport or operating-system failure.
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use ErrorKind::*;
        match self {
            Error::Lti(e) => lti_kind(e),
            Error::Signal(e) => signal_kind(e),
            Error::Sysid(e) => sysid_kind(e),
            Error::Control(e) => control_kind(e),
            Error::Sim(e) => match e {
                sim::SimError::Diverged { .. } => Numerical,
                sim::SimError::Control(e) => control_kind(e),
                sim::SimError::Lti(e) => lti_kind(e),
                sim::SimError::Signal(e) => signal_kind(e),
                sim::SimError::Sysid(e) => sysid_kind(e),
                sim::SimError::Link(_) => Io,
                _ => Validation,
            },
            Error::Link(link::LinkError::BadLength(_))
            | Error::Link(link::LinkError::InvalidLoss(_)) => Validation,
            Error::Link(link::LinkError::InvalidRate(_)) => Validation,
            Error::Link(_) => Io,
            Error::File(_) => Validation,
        }
    }
}

fn lti_kind(e: &lti::LtiError) -> ErrorKind {
    match e {
        lti::LtiError::Roots(_) | lti::LtiError::Integration(_) | lti::LtiError::NoSteadyState => {
            ErrorKind::Numerical
        }
        _ => ErrorKind::Validation,
    }
}

fn signal_kind(e: &signal::SignalError) -> ErrorKind {
    match e {
        signal::SignalError::RankDeficient(_) | signal::SignalError::ZeroVariance => {
            ErrorKind::Numerical
        }
        _ => ErrorKind::Validation,
    }
}

fn sysid_kind(e: &sysid::SysidError) -> ErrorKind {
    use sysid::SysidError::*;
    match e {
        NonConvergence { .. } | NoiseModelInsufficient { .. } | Linalg(_) => ErrorKind::Numerical,
        Signal(s) => signal_kind(s),
        Lti(l) => lti_kind(l),
        _ => ErrorKind::Validation,
    }
}

fn control_kind(e: &control::ControlError) -> ErrorKind {
    match e {
        control::ControlError::Lti(l) => lti_kind(l),
        _ => ErrorKind::Validation,
    }
}
