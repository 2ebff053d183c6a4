use super::{DepthPacket, LinkError};

/// Link counters.
///
/// `received` counts accepted good packets; `dropped` counts sequence numbers that never
/// arrived in order plus tracking-invalid packets, so after the stream ends
/// `received + dropped = highest_seq + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkStats {
    pub sent: u64,
    pub received: u64,
    pub dropped: u64,
    /// Frame periods that produced a depth value.
    pub emitted: u64,
    /// Frames that re-emitted the previous depth.
    pub repeated: u64,
    /// Packets older than the next expected sequence number, discarded.
    pub late: u64,
    /// Longest run of consecutive missing sequence numbers.
    pub max_gap: u64,
    pub highest_seq: Option<u32>,
}

impl LinkStats {
    pub fn accounting_holds(&self) -> bool {
        match self.highest_seq {
            None => self.received == 0 && self.dropped == 0,
            Some(h) => self.received + self.dropped == u64::from(h) + 1,
        }
    }

    /// Receiver counters with the sender's `sent`.
    pub fn merged_with_sender(mut self, sender: &LinkStats) -> Self {
        self.sent = sender.sent;
        self
    }
}

/// Repeat-last-frame receiver: emits exactly one depth per frame period.
#[derive(Debug, Clone)]
pub struct Receiver {
    last_good: Option<f64>,
    default: Option<f64>,
    expected: u32,
    started: bool,
    start_timeout_frames: u64,
    frames: u64,
    stats: LinkStats,
}

impl Receiver {
    /// `default` is emitted until the first good packet; without it the stream must start
    /// within `start_timeout_frames` frames.
    pub fn new(start_timeout_frames: u64, default: Option<f64>) -> Self {
        Self {
            last_good: None,
            default,
            expected: 0,
            started: false,
            start_timeout_frames,
            frames: 0,
            stats: LinkStats::default(),
        }
    }

    pub fn stats(&self) -> &LinkStats {
        &self.stats
    }

    /// Accounts one arriving packet; returns its depth if it is fresh and good.
    fn absorb(&mut self, p: &DepthPacket) -> Option<f64> {
        if self.started && p.seq < self.expected {
            self.stats.late += 1;
            return None;
        }
        let gap = u64::from(p.seq - if self.started { self.expected } else { 0 });
        self.stats.dropped += gap;
        self.stats.max_gap = self.stats.max_gap.max(gap);
        self.started = true;
        self.expected = p.seq.wrapping_add(1);
        self.stats.highest_seq = Some(p.seq);
        if p.tracking_valid() && p.depth_mm.is_finite() {
            self.stats.received += 1;
            Some(p.depth_mm)
        } else {
            self.stats.dropped += 1;
            None
        }
    }

    /// One frame period with at most one arrival.
    pub fn step(&mut self, incoming: Option<DepthPacket>) -> Result<Option<f64>, LinkError> {
        self.frame(incoming.as_slice())
    }

    /// One frame period with every packet that arrived during it, in arrival order. The
    /// freshest good depth is emitted; with none, the previous frame's value is repeated.
    pub fn frame(&mut self, arrivals: &[DepthPacket]) -> Result<Option<f64>, LinkError> {
        self.frames += 1;
        let mut fresh = None;
        for p in arrivals {
            if let Some(d) = self.absorb(p) {
                fresh = Some(d);
            }
        }
        if let Some(d) = fresh {
            self.last_good = Some(d);
            self.stats.emitted += 1;
            return Ok(Some(d));
        }
        match self.last_good {
            Some(d) => {
                self.stats.repeated += 1;
                self.stats.emitted += 1;
                Ok(Some(d))
            }
            None if self.default.is_some() => {
                self.stats.emitted += 1;
                Ok(self.default)
            }
            None if self.frames >= self.start_timeout_frames => {
                Err(LinkError::StreamNeverStarted {
                    frames: self.frames,
                })
            }
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::STATUS_TRACKING_VALID;

    fn pkt(seq: u32, depth: f64) -> DepthPacket {
        DepthPacket {
            seq,
            timestamp_us: u64::from(seq) * 33_333,
            depth_mm: depth,
            status: STATUS_TRACKING_VALID,
        }
    }

    #[test]
    fn gap_repeats_previous_frame() {
        let mut r = Receiver::new(10, None);
        let out: Vec<f64> = [
            Some(pkt(0, 1.0)),
            Some(pkt(1, 2.0)),
            None,
            Some(pkt(3, 4.0)),
        ]
        .into_iter()
        .map(|p| r.step(p).unwrap().unwrap())
        .collect();
        assert_eq!(out, [1.0, 2.0, 2.0, 4.0]);
        let s = r.stats();
        assert_eq!((s.repeated, s.dropped, s.received, s.max_gap), (1, 1, 3, 1));
        assert!(s.accounting_holds());
    }

    #[test]
    fn lossless_stream_passes_through() {
        let mut r = Receiver::new(10, None);
        for i in 0..100 {
            assert_eq!(
                r.step(Some(pkt(i, f64::from(i)))).unwrap(),
                Some(f64::from(i))
            );
        }
        assert_eq!(r.stats().repeated, 0);
        assert!(r.stats().accounting_holds());
    }

    #[test]
    fn late_and_invalid_packets_are_not_used() {
        let mut r = Receiver::new(10, None);
        r.step(Some(pkt(0, 1.0))).unwrap();
        r.step(Some(pkt(2, 3.0))).unwrap();
        assert_eq!(r.step(Some(pkt(1, 2.0))).unwrap(), Some(3.0));
        let bad = DepthPacket {
            status: 0,
            ..pkt(3, 9.0)
        };
        assert_eq!(r.step(Some(bad)).unwrap(), Some(3.0));
        let s = r.stats();
        assert_eq!((s.late, s.dropped, s.received, s.repeated), (1, 2, 2, 2));
        assert!(s.accounting_holds());
    }

    #[test]
    fn never_started() {
        let mut r = Receiver::new(3, None);
        assert_eq!(r.step(None).unwrap(), None);
        assert_eq!(r.step(None).unwrap(), None);
        assert!(matches!(
            r.step(None),
            Err(LinkError::StreamNeverStarted { frames: 3 })
        ));
        let mut d = Receiver::new(3, Some(245.1));
        for _ in 0..5 {
            assert_eq!(d.step(None).unwrap(), Some(245.1));
        }
    }
}
