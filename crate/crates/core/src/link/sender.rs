use std::time::{Duration, Instant};

use super::{encode_packet, DatagramTx, DepthPacket, LinkError, LinkStats};

/// Time source for pacing.
pub trait Clock {
    /// Time since the clock was created.
    fn now(&self) -> Duration;
    fn sleep_until(&mut self, t: Duration);
}

#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            start: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.start.elapsed()
    }

    fn sleep_until(&mut self, t: Duration) {
        let now = self.now();
        if t > now {
            std::thread::sleep(t - now);
        }
    }
}

/// Virtual clock that advances only when asked to sleep.
#[derive(Debug, Clone, Copy, Default)]
pub struct ManualClock {
    now: Duration,
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        self.now
    }

    fn sleep_until(&mut self, t: Duration) {
        self.now = self.now.max(t);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenderReport {
    pub stats: LinkStats,
    /// Clock reading at each successful send.
    pub send_times: Vec<Duration>,
}

impl SenderReport {
    pub fn mean_period(&self) -> Option<Duration> {
        let n = self.send_times.len();
        (n >= 2).then(|| (self.send_times[n - 1] - self.send_times[0]) / (n as u32 - 1))
    }
}

/// Sends `frames` packets at `rate_hz`, one per period on an absolute schedule.
///
/// `source(seq, t)` supplies depth and status. A failing send is retried up to
/// `max_retries` times, 1 ms apart, before the channel is reported unavailable.
pub fn paced_sender<F, C, K>(
    mut source: F,
    rate_hz: f64,
    frames: u32,
    tx: &mut C,
    clock: &mut K,
    max_retries: u32,
) -> Result<SenderReport, LinkError>
where
    F: FnMut(u32, Duration) -> (f64, u8),
    C: DatagramTx + ?Sized,
    K: Clock + ?Sized,
{
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(LinkError::InvalidRate(rate_hz));
    }
    let period = Duration::from_secs_f64(1.0 / rate_hz);
    let start = clock.now();
    let mut stats = LinkStats::default();
    let mut send_times = Vec::with_capacity(frames as usize);
    let mut last_ts: Option<u64> = None;
    for seq in 0..frames {
        clock.sleep_until(start + period * seq);
        let now = clock.now();
        let mut ts = (now - start).as_micros() as u64;
        if let Some(prev) = last_ts {
            ts = ts.max(prev + 1);
        }
        last_ts = Some(ts);
        let (depth_mm, status) = source(seq, now - start);
        let bytes = encode_packet(&DepthPacket {
            seq,
            timestamp_us: ts,
            depth_mm,
            status,
        });
        let mut attempt = 0;
        loop {
            match tx.send(&bytes) {
                Ok(()) => break,
                Err(e) if attempt >= max_retries => {
                    return Err(LinkError::ChannelUnavailable {
                        attempts: attempt + 1,
                        last: e.to_string(),
                    })
                }
                Err(_) => {
                    attempt += 1;
                    let t = clock.now() + Duration::from_millis(1);
                    clock.sleep_until(t);
                }
            }
        }
        stats.sent += 1;
        send_times.push(now);
        tx.tick()?;
    }
    Ok(SenderReport { stats, send_times })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{decode_packet, memory_channel, DatagramRx};

    struct Broken(u32);

    impl DatagramTx for Broken {
        fn send(&mut self, _: &[u8]) -> Result<(), LinkError> {
            self.0 += 1;
            Err(LinkError::Disconnected)
        }
    }

    #[test]
    fn thirty_hertz_for_ten_seconds() {
        let (mut tx, mut rx) = memory_channel();
        let mut clock = ManualClock::default();
        let rep = paced_sender(|_, _| (245.1, 1), 30.0, 300, &mut tx, &mut clock, 0).unwrap();
        assert_eq!(rep.stats.sent, 300);
        let pkts: Vec<DepthPacket> = rx
            .drain()
            .unwrap()
            .iter()
            .map(|b| decode_packet(b).unwrap())
            .collect();
        assert_eq!(pkts.len(), 300);
        assert!(pkts
            .windows(2)
            .all(|w| w[1].seq == w[0].seq + 1 && w[1].timestamp_us > w[0].timestamp_us));
        assert!(clock.now() < Duration::from_secs(10));
    }

    #[test]
    fn one_hertz_for_three_seconds() {
        let (mut tx, mut rx) = memory_channel();
        let mut clock = ManualClock::default();
        paced_sender(|_, _| (1.0, 1), 1.0, 3, &mut tx, &mut clock, 0).unwrap();
        let seqs: Vec<u32> = rx
            .drain()
            .unwrap()
            .iter()
            .map(|b| decode_packet(b).unwrap().seq)
            .collect();
        assert_eq!(seqs, [0, 1, 2]);
    }

    #[test]
    fn bounded_retries() {
        let mut b = Broken(0);
        let mut clock = ManualClock::default();
        let e = paced_sender(|_, _| (1.0, 1), 30.0, 5, &mut b, &mut clock, 3).unwrap_err();
        assert!(matches!(
            e,
            LinkError::ChannelUnavailable { attempts: 4, .. }
        ));
        assert_eq!(b.0, 4);
        assert!(paced_sender(|_, _| (1.0, 1), 0.0, 5, &mut b, &mut clock, 3).is_err());
    }
}
