use super::LinkError;

/// Bytes on the wire: `seq u32 | timestamp_us u64 | depth_mm f64 | status u8`, little-endian.
pub const PACKET_LEN: usize = 21;

/// Status bit 0: the tracker produced a valid face fix.
pub const STATUS_TRACKING_VALID: u8 = 0b01;
/// Status bit 1: camera distance outside the near-mode range; depth was clamped.
pub const STATUS_OUT_OF_RANGE: u8 = 0b10;

/// One depth measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthPacket {
    pub seq: u32,
    /// Microseconds since stream start.
    pub timestamp_us: u64,
    pub depth_mm: f64,
    pub status: u8,
}

impl DepthPacket {
    pub fn tracking_valid(&self) -> bool {
        self.status & STATUS_TRACKING_VALID != 0
    }

    pub fn out_of_range(&self) -> bool {
        self.status & STATUS_OUT_OF_RANGE != 0
    }
}

pub fn encode_packet(p: &DepthPacket) -> [u8; PACKET_LEN] {
    let mut b = [0u8; PACKET_LEN];
    b[0..4].copy_from_slice(&p.seq.to_le_bytes());
    b[4..12].copy_from_slice(&p.timestamp_us.to_le_bytes());
    b[12..20].copy_from_slice(&p.depth_mm.to_le_bytes());
    b[20] = p.status;
    b
}

/// Rejects any datagram whose length is not exactly [`PACKET_LEN`].
pub fn decode_packet(bytes: &[u8]) -> Result<DepthPacket, LinkError> {
    let b: &[u8; PACKET_LEN] = bytes
        .try_into()
        .map_err(|_| LinkError::BadLength(bytes.len()))?;
    Ok(DepthPacket {
        seq: u32::from_le_bytes(b[0..4].try_into().unwrap()),
        timestamp_us: u64::from_le_bytes(b[4..12].try_into().unwrap()),
        depth_mm: f64::from_le_bytes(b[12..20].try_into().unwrap()),
        status: b[20],
    })
}
