//! Depth telemetry over UDP: a fixed 21-byte packet, paced 30 Hz sending, and a receiver that
//! repeats the previous frame whenever a packet is missing, late or invalid.

mod channel;
mod packet;
mod receiver;
mod sender;

pub use channel::{
    memory_channel, DatagramRx, DatagramTx, LossyTx, MemoryRx, MemoryTx, UdpRx, UdpTx, DEFAULT_PORT,
};
pub use packet::{
    decode_packet, encode_packet, DepthPacket, PACKET_LEN, STATUS_OUT_OF_RANGE,
    STATUS_TRACKING_VALID,
};
pub use receiver::{LinkStats, Receiver};
pub use sender::{paced_sender, Clock, ManualClock, SenderReport, SystemClock};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("datagram has {0} bytes, expected {PACKET_LEN}")]
    BadLength(usize),
    #[error("no good packet received within {frames} frames: stream never started")]
    StreamNeverStarted { frames: u64 },
    #[error("loss probability must lie in [0, 1), got {0}")]
    InvalidLoss(f64),
    #[error("send rate must be > 0 Hz, got {0}")]
    InvalidRate(f64),
    #[error("channel unavailable after {attempts} attempts: {last}")]
    ChannelUnavailable { attempts: u32, last: String },
    #[error("channel disconnected")]
    Disconnected,
    #[error("socket error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LinkError {
    fn from(e: std::io::Error) -> Self {
        LinkError::Io(e.to_string())
    }
}
