use std::time::Duration;

use headpos::control::{
    build_cascade, ControllerConfig, DelayMode, LoopTopology, PiParams, PidParams,
};
use headpos::link::{memory_channel, LossyTx};
use headpos::lti::step_response;
use headpos::sim::{
    simulate_closed_loop, simulate_closed_loop_with, SensorPath, SimConfig, SimError, Trajectory,
};
use headpos::sysid::ProcessModel;

fn topology() -> LoopTopology<f64> {
    let c = ControllerConfig::reference();
    LoopTopology::new(
        c.pid,
        c.pi,
        ProcessModel::reference().to_tf().unwrap(),
        DelayMode::Pade2,
    )
    .unwrap()
}

#[test]
fn unsaturated_noiseless_loop_matches_rational_cascade() {
    let topo = topology();
    let cfg = SimConfig {
        duration: 200.0,
        ..SimConfig::ideal()
    };
    let trace = simulate_closed_loop(&topo, &Trajectory::constant(25.32), &cfg).unwrap();
    let step = step_response(&build_cascade(&topo).unwrap().closed_loop, 200.0, 0.01).unwrap();
    let amp = 25.32 - 24.51;
    let se: f64 = trace
        .t
        .iter()
        .zip(&trace.y_true)
        .map(|(&t, &y)| (y - (24.51 + amp * step.sample(t))).powi(2))
        .sum();
    let rms = (se / trace.len() as f64).sqrt();
    assert!(rms <= 0.02 * amp, "relative RMS {}", rms / amp);
}

#[test]
fn actuator_stays_within_limits() {
    let cfg = SimConfig {
        duration: 60.0,
        ..SimConfig::default()
    };
    let trace = simulate_closed_loop(&topology(), &Trajectory::constant(26.5), &cfg).unwrap();
    assert!(trace.u.iter().all(|&u| (0.0..=165.0).contains(&u)));
}

#[test]
fn windup_is_limited_during_long_saturation() {
    // an unreachable setpoint saturates the valve; once it returns, the loop recovers
    let traj = Trajectory::new(vec![(0.0, 40.0), (200.0, 25.32)]).unwrap();
    let cfg = SimConfig {
        duration: 600.0,
        ..SimConfig::default()
    };
    let trace = simulate_closed_loop(&topology(), &traj, &cfg).unwrap();
    let tail: Vec<f64> = trace
        .t
        .iter()
        .zip(&trace.y_true)
        .filter(|(t, _)| **t >= 500.0)
        .map(|(_, y)| *y)
        .collect();
    let worst = tail.iter().map(|y| (y - 25.32).abs()).fold(0.0, f64::max);
    assert!(worst < 0.3, "tail deviation {worst}");
}

#[test]
fn lossless_link_reproduces_direct_sensing() {
    let topo = topology();
    let cfg = SimConfig {
        duration: 30.0,
        seed: 5,
        ..SimConfig::default()
    };
    let traj = Trajectory::constant(25.32);
    let direct = simulate_closed_loop(&topo, &traj, &cfg).unwrap();
    let (tx, mut rx) = memory_channel();
    let mut tx = LossyTx::new(tx, 0.0, 0, 1).unwrap();
    let run = simulate_closed_loop_with(
        &topo,
        &traj,
        &cfg,
        SensorPath::Link {
            tx: &mut tx,
            rx: &mut rx,
            wait: Duration::ZERO,
        },
    )
    .unwrap();
    assert_eq!(run.trace, direct);
    let link = run.link.unwrap();
    assert_eq!(
        (link.sent, link.received, link.dropped, link.repeated),
        (run.frames, run.frames, 0, 0)
    );
}

#[test]
fn heavy_loss_still_converges() {
    let (tx, mut rx) = memory_channel();
    let mut tx = LossyTx::new(tx, 0.5, 0, 3).unwrap();
    let cfg = SimConfig {
        duration: 300.0,
        ..SimConfig::default()
    };
    let run = simulate_closed_loop_with(
        &topology(),
        &Trajectory::constant(25.32),
        &cfg,
        SensorPath::Link {
            tx: &mut tx,
            rx: &mut rx,
            wait: Duration::ZERO,
        },
    )
    .unwrap();
    let link = run.link.unwrap();
    assert!(link.repeated > run.frames / 3);
    assert!(link.accounting_holds());
    let last = *run.trace.y_true.last().unwrap();
    assert!((last - 25.32).abs() < 0.2, "final height {last}");
}

#[test]
fn divergence_returns_partial_trace() {
    // positive feedback through the inverted PI sign drives the head out of range
    let pid = PidParams::new(3.4993, 0.054765, 55.8988).unwrap();
    let pi = PiParams::new(-30.0, 0.5).unwrap();
    let topo = LoopTopology::new(
        pid,
        pi,
        ProcessModel::reference().to_tf().unwrap(),
        DelayMode::Pade2,
    )
    .unwrap();
    let cfg = SimConfig {
        duration: 5000.0,
        ..SimConfig::ideal()
    };
    match simulate_closed_loop(&topo, &Trajectory::constant(25.32), &cfg) {
        Err(SimError::Diverged { t, trace }) => {
            assert!(t > 0.0 && !trace.is_empty());
            assert_eq!(trace.t.len(), trace.y_true.len());
        }
        other => panic!("expected divergence, got {:?}", other.map(|t| t.len())),
    }
}

#[test]
fn single_precision_run_tracks_double() {
    let c = ControllerConfig::<f32>::reference();
    let topo32 = LoopTopology::new(
        c.pid,
        c.pi,
        ProcessModel::<f32>::reference().to_tf().unwrap(),
        DelayMode::Pade2,
    )
    .unwrap();
    let cfg32 = SimConfig::<f32> {
        duration: 60.0,
        ..SimConfig::ideal()
    };
    let cfg64 = SimConfig::<f64> {
        duration: 60.0,
        ..SimConfig::ideal()
    };
    let a = simulate_closed_loop(&topo32, &Trajectory::constant(25.32f32), &cfg32).unwrap();
    let b = simulate_closed_loop(&topology(), &Trajectory::constant(25.32), &cfg64).unwrap();
    let worst = a
        .y_true
        .iter()
        .zip(&b.y_true)
        .map(|(x, y)| (f64::from(*x) - y).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-2, "f32 vs f64 {worst}");
}
