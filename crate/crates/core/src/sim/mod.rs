//! Fixed-step closed-loop simulation of the head-positioning rig and the open-loop data
//! generator used for identification.

mod closed_loop;
mod config;
mod delay;
mod excite;
mod metrics;
mod sensor;
mod trajectory;

pub use closed_loop::{
    simulate_closed_loop, simulate_closed_loop_with, SensorPath, SimRun, SimTrace,
};
pub use config::{Disturbance, SimConfig, SIM_CONFIG_KEYS};
pub use delay::DelayLine;
pub use excite::{open_loop_excite, SawtoothSpec, BAND_LIMIT_HZ, SAWTOOTH_KEYS};
pub use metrics::{
    band_entry_time, post_settling_deviation, segment_steady_deviation, TrackingMetrics,
};
pub use sensor::{depth_sensor_sample, SensorMapping, SensorReading, DEPTH_RANGE_MM};
pub use trajectory::Trajectory;

use thiserror::Error;

use crate::control::ControlError;
use crate::kv::KvError;
use crate::link::LinkError;
use crate::lti::LtiError;
use crate::signal::SignalError;
use crate::sysid::SysidError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("trajectory file line {line}: {message}")]
    TrajectoryFile { line: usize, message: String },
    #[error("excitation cutoff {cutoff_hz} Hz exceeds the {limit_hz} Hz band limit")]
    BandLimit { cutoff_hz: f64, limit_hz: f64 },
    #[error("simulation diverged at t = {t} s")]
    Diverged { t: f64, trace: Box<SimTrace<f64>> },
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Sysid(#[from] SysidError),
    #[error("config file {0}")]
    File(#[from] KvError),
}
