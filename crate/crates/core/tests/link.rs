use std::net::SocketAddr;
use std::thread;
use std::time::Duration;

use headpos::link::{
    decode_packet, encode_packet, memory_channel, paced_sender, DatagramRx, DatagramTx,
    DepthPacket, LinkError, LossyTx, ManualClock, Receiver, SystemClock, UdpRx, UdpTx,
};

fn localhost() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

#[test]
fn paced_udp_stream_holds_its_rate() {
    let mut rx = UdpRx::bind(localhost()).unwrap();
    let mut tx = UdpTx::connect(rx.local_addr().unwrap()).unwrap();
    let frames = 300u32;
    let reader = thread::spawn(move || {
        let mut got = Vec::new();
        while got.len() < frames as usize {
            match rx.recv(Duration::from_secs(2)).unwrap() {
                Some(d) => got.push(decode_packet(&d).unwrap()),
                None => break,
            }
        }
        got
    });
    let mut clock = SystemClock::new();
    let report = paced_sender(
        |seq, _| (245.0 + f64::from(seq % 7), 1),
        30.0,
        frames,
        &mut tx,
        &mut clock,
        3,
    )
    .unwrap();
    let got = reader.join().unwrap();

    let period = report.mean_period().unwrap().as_secs_f64();
    assert!(
        (period - 1.0 / 30.0).abs() <= 0.01 / 30.0,
        "mean period {period}"
    );
    assert_eq!(report.stats.sent, u64::from(frames));
    assert_eq!(got.len(), frames as usize);
    let mut r = Receiver::new(10, None);
    for p in &got {
        assert!(r.step(Some(*p)).unwrap().is_some());
    }
    let stats = r.stats().merged_with_sender(&report.stats);
    assert!(stats.accounting_holds());
    assert_eq!((stats.received, stats.dropped), (u64::from(frames), 0));
    assert!(got
        .windows(2)
        .all(|w| w[1].timestamp_us > w[0].timestamp_us));
}

#[test]
fn lossy_channel_keeps_the_books_balanced() {
    let (tx, mut rx) = memory_channel();
    let mut lossy = LossyTx::new(tx, 0.1, 2, 42).unwrap();
    let mut r = Receiver::new(100, None);
    let frames = 3000u32;
    let mut outputs = 0u64;
    let decode_all = |raw: Vec<Vec<u8>>| -> Vec<DepthPacket> {
        raw.iter().map(|d| decode_packet(d).unwrap()).collect()
    };
    for seq in 0..frames {
        let p = DepthPacket {
            seq,
            timestamp_us: u64::from(seq) * 33_333,
            depth_mm: f64::from(seq),
            status: 1,
        };
        lossy.send(&encode_packet(&p)).unwrap();
        lossy.tick().unwrap();
        if r.frame(&decode_all(rx.drain().unwrap())).unwrap().is_some() {
            outputs += 1;
        }
    }
    lossy.flush().unwrap();
    r.frame(&decode_all(rx.drain().unwrap())).unwrap();
    let stats = r.stats();
    assert_eq!(outputs, u64::from(frames));
    assert!(stats.accounting_holds(), "{stats:?}");
    let loss = lossy.lost as f64 / f64::from(frames);
    assert!((loss - 0.1).abs() < 0.03, "injected loss {loss}");
    // jittered packets overtaken by a newer one are counted once as dropped, then discarded as late
    assert_eq!(stats.dropped, lossy.lost + stats.late, "{stats:?}");
    assert!(stats.repeated >= stats.dropped - stats.late);
}

#[test]
fn manual_clock_paces_exactly() {
    let (mut tx, mut rx) = memory_channel();
    let mut clock = ManualClock::default();
    let report = paced_sender(|_, _| (300.0, 1), 30.0, 90, &mut tx, &mut clock, 0).unwrap();
    assert_eq!(
        report.mean_period().unwrap(),
        Duration::from_secs_f64(1.0 / 30.0)
    );
    assert_eq!(rx.drain().unwrap().len(), 90);
}

#[test]
fn stream_that_never_starts_is_reported() {
    let mut r = Receiver::new(5, None);
    let mut last = Ok(None);
    for _ in 0..6 {
        last = r.frame(&[]);
    }
    assert!(matches!(last, Err(LinkError::StreamNeverStarted { .. })));
}
