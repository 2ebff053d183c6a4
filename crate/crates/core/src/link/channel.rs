use std::collections::VecDeque;
use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::sync::mpsc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LinkError, PACKET_LEN};

/// Default UDP port for depth telemetry.
pub const DEFAULT_PORT: u16 = 47808;

/// Sending half of a datagram channel.
pub trait DatagramTx: Send {
    fn send(&mut self, datagram: &[u8]) -> Result<(), LinkError>;

    /// Called once per frame period so delaying channels can release held datagrams.
    fn tick(&mut self) -> Result<(), LinkError> {
        Ok(())
    }
}

/// Receiving half of a datagram channel.
pub trait DatagramRx: Send {
    /// Next datagram, waiting at most `timeout`; `None` on timeout.
    fn recv(&mut self, timeout: Duration) -> Result<Option<Vec<u8>>, LinkError>;

    /// Every datagram already queued, without waiting.
    fn drain(&mut self) -> Result<Vec<Vec<u8>>, LinkError> {
        let mut out = Vec::new();
        while let Some(d) = self.recv(Duration::ZERO)? {
            out.push(d);
        }
        Ok(out)
    }
}

pub struct MemoryTx(mpsc::Sender<Vec<u8>>);
pub struct MemoryRx(mpsc::Receiver<Vec<u8>>);

/// In-process loopback channel.
pub fn memory_channel() -> (MemoryTx, MemoryRx) {
    let (tx, rx) = mpsc::channel();
    (MemoryTx(tx), MemoryRx(rx))
}

impl DatagramTx for MemoryTx {
    fn send(&mut self, datagram: &[u8]) -> Result<(), LinkError> {
        self.0
            .send(datagram.to_vec())
            .map_err(|_| LinkError::Disconnected)
    }
}

impl DatagramRx for MemoryRx {
    fn recv(&mut self, timeout: Duration) -> Result<Option<Vec<u8>>, LinkError> {
        let r = if timeout.is_zero() {
            self.0
                .try_recv()
                .map_err(|e| matches!(e, mpsc::TryRecvError::Disconnected))
        } else {
            self.0
                .recv_timeout(timeout)
                .map_err(|e| matches!(e, mpsc::RecvTimeoutError::Disconnected))
        };
        match r {
            Ok(d) => Ok(Some(d)),
            // a closed sender still lets queued datagrams through; afterwards it reads as silence
            Err(_) => Ok(None),
        }
    }
}

pub struct UdpTx {
    socket: UdpSocket,
    target: SocketAddr,
}

impl UdpTx {
    pub fn connect(target: SocketAddr) -> Result<Self, LinkError> {
        let bind: SocketAddr = if target.is_ipv4() {
            "0.0.0.0:0"
        } else {
            "[::]:0"
        }
        .parse()
        .unwrap();
        let socket = UdpSocket::bind(bind)?;
        Ok(Self { socket, target })
    }
}

impl DatagramTx for UdpTx {
    fn send(&mut self, datagram: &[u8]) -> Result<(), LinkError> {
        self.socket.send_to(datagram, self.target)?;
        Ok(())
    }
}

pub struct UdpRx {
    socket: UdpSocket,
}

impl UdpRx {
    /// Binds `addr`; port 0 picks a free port, see [`UdpRx::local_addr`].
    pub fn bind(addr: SocketAddr) -> Result<Self, LinkError> {
        Ok(Self {
            socket: UdpSocket::bind(addr)?,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, LinkError> {
        Ok(self.socket.local_addr()?)
    }
}

impl DatagramRx for UdpRx {
    fn recv(&mut self, timeout: Duration) -> Result<Option<Vec<u8>>, LinkError> {
        let mut buf = [0u8; 2 * PACKET_LEN];
        if timeout.is_zero() {
            self.socket.set_nonblocking(true)?;
        } else {
            self.socket.set_nonblocking(false)?;
            self.socket.set_read_timeout(Some(timeout))?;
        }
        match self.socket.recv_from(&mut buf) {
            Ok((n, _)) => Ok(Some(buf[..n].to_vec())),
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) =>
            {
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Sender-side fault injection: seeded Bernoulli loss and a uniform extra delay of up to
/// `jitter_frames` frame periods.
pub struct LossyTx<C> {
    inner: C,
    loss_prob: f64,
    jitter_frames: u32,
    rng: ChaCha8Rng,
    frame: u64,
    held: VecDeque<(u64, Vec<u8>)>,
    pub lost: u64,
}

impl<C: DatagramTx> LossyTx<C> {
    pub fn new(inner: C, loss_prob: f64, jitter_frames: u32, seed: u64) -> Result<Self, LinkError> {
        if !(0.0..1.0).contains(&loss_prob) {
            return Err(LinkError::InvalidLoss(loss_prob));
        }
        Ok(Self {
            inner,
            loss_prob,
            jitter_frames,
            rng: ChaCha8Rng::seed_from_u64(seed),
            frame: 0,
            held: VecDeque::new(),
            lost: 0,
        })
    }

    /// Converts a jitter bound in milliseconds to whole frame periods.
    pub fn jitter_frames_for(jitter_ms: f64, rate_hz: f64) -> u32 {
        (jitter_ms.max(0.0) * rate_hz / 1000.0).round() as u32
    }

    pub fn into_inner(self) -> C {
        self.inner
    }

    fn release(&mut self) -> Result<(), LinkError> {
        while self.held.front().is_some_and(|(due, _)| *due <= self.frame) {
            let (_, d) = self.held.pop_front().unwrap();
            self.inner.send(&d)?;
        }
        Ok(())
    }

    /// Sends everything still held regardless of its due frame.
    pub fn flush(&mut self) -> Result<(), LinkError> {
        while let Some((_, d)) = self.held.pop_front() {
            self.inner.send(&d)?;
        }
        Ok(())
    }
}

impl<C: DatagramTx> DatagramTx for LossyTx<C> {
    fn send(&mut self, datagram: &[u8]) -> Result<(), LinkError> {
        // both draws happen for every datagram so the loss pattern does not depend on jitter
        let lose = self.rng.random::<f64>() < self.loss_prob;
        let delay = if self.jitter_frames > 0 {
            self.rng.random_range(0..=self.jitter_frames)
        } else {
            0
        };
        if lose {
            self.lost += 1;
            return Ok(());
        }
        if delay == 0 && self.held.is_empty() {
            return self.inner.send(datagram);
        }
        let due = self.frame + u64::from(delay);
        let pos = self
            .held
            .iter()
            .position(|(d, _)| *d > due)
            .unwrap_or(self.held.len());
        self.held.insert(pos, (due, datagram.to_vec()));
        self.release()
    }

    fn tick(&mut self) -> Result<(), LinkError> {
        self.frame += 1;
        self.release()?;
        self.inner.tick()
    }
}
