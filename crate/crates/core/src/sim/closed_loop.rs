use std::io;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{depth_sensor_sample, DelayLine, SensorMapping, SimConfig, SimError, Trajectory};
use crate::control::{LoopTopology, PiParams, PidParams};
use crate::link::{
    decode_packet, encode_packet, DatagramRx, DatagramTx, DepthPacket, LinkStats, Receiver,
    STATUS_OUT_OF_RANGE, STATUS_TRACKING_VALID,
};
use crate::lti::CanonicalRealization;
use crate::ode::Rk2;
use crate::signal::{moving_average, FirFilter};
use crate::Scalar;

/// Time-indexed closed-loop record. Heights in cm, actuator in mA.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace<T> {
    pub t: Vec<T>,
    pub r: Vec<T>,
    pub e: Vec<T>,
    pub u: Vec<T>,
    pub y_true: Vec<T>,
    pub y_meas: Vec<T>,
}

impl<T: Scalar> SimTrace<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push(&mut self, t: T, r: T, e: T, u: T, y_true: T, y_meas: T) {
        self.t.push(t);
        self.r.push(r);
        self.e.push(e);
        self.u.push(u);
        self.y_true.push(y_true);
        self.y_meas.push(y_meas);
    }

    pub fn to_f64(&self) -> SimTrace<f64> {
        let c = |v: &[T]| v.iter().map(|x| x.as_f64()).collect();
        SimTrace {
            t: c(&self.t),
            r: c(&self.r),
            e: c(&self.e),
            u: c(&self.u),
            y_true: c(&self.y_true),
            y_meas: c(&self.y_meas),
        }
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,r,e,u,y_true,y_meas")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.t[i], self.r[i], self.e[i], self.u[i], self.y_true[i], self.y_meas[i]
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut v = Vec::new();
        self.write_csv(&mut v).expect("writing to memory");
        String::from_utf8(v).expect("ascii")
    }
}

/// Where sensor frames travel before filtering.
pub enum SensorPath<'a> {
    Direct,
    /// Frames are encoded, sent through `tx` and read back from `rx` by a repeat-last-frame
    /// receiver. `wait` bounds how long one frame waits for its packet.
    Link {
        tx: &'a mut dyn DatagramTx,
        rx: &'a mut dyn DatagramRx,
        wait: Duration,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun<T> {
    pub trace: SimTrace<T>,
    /// Receiver counters with `sent` filled in; only for linked runs.
    pub link: Option<LinkStats>,
    pub frames: u64,
    pub out_of_range_frames: u64,
    /// Control steps with the actuator at a limit.
    pub saturated_steps: u64,
}

/// Error-driven PID feeding the setpoint of the inner PI loop, both with conditional
/// integration anti-windup.
#[derive(Debug, Clone)]
struct Cascade<T> {
    pid: PidParams<T>,
    pi: PiParams<T>,
    tau: T,
    i_outer: T,
    i_inner: T,
    d: T,
    e_prev: Option<T>,
}

impl<T: Scalar> Cascade<T> {
    fn new(pid: PidParams<T>, pi: PiParams<T>) -> Result<Self, SimError> {
        let tau = pid.filter_time_constant()?;
        Ok(Self {
            pid,
            pi,
            tau,
            i_outer: T::zero(),
            i_inner: T::zero(),
            d: T::zero(),
            e_prev: None,
        })
    }

    /// Valve current for tracking error `e` and measured deviation from rest `y_dev`, both mm.
    fn update(&mut self, e: T, y_dev: T, dt: T, cfg: &SimConfig<T>) -> (T, bool) {
        let e_prev = self.e_prev.unwrap_or(T::zero());
        self.e_prev = Some(e);
        if self.pid.kd != T::zero() {
            // backward Euler on kd s / (tau s + 1)
            self.d = (self.tau * self.d + self.pid.kd * (e - e_prev)) / (self.tau + dt);
        }
        let v = self.pid.kp * e + self.i_outer + self.d;
        let ei = v - y_dev;
        let raw = cfg.u_bias + self.pi.kp * ei + self.i_inner;
        let u = raw.max(cfg.u_min).min(cfg.u_max);
        let dir = if raw > cfg.u_max {
            T::one()
        } else if raw < cfg.u_min {
            -T::one()
        } else {
            T::zero()
        };
        if dir * ei <= T::zero() {
            self.i_inner += self.pi.ki * ei * dt;
        }
        let inner_sign = if self.pi.kp < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        if dir * e * inner_sign <= T::zero() {
            self.i_outer += self.pid.ki * e * dt;
        }
        (u, dir != T::zero())
    }
}

struct Plant<T> {
    real: CanonicalRealization<T>,
    x: Vec<T>,
    rk: Rk2<T>,
}

impl<T: Scalar> Plant<T> {
    fn output(&self, u: T) -> T {
        self.real.output(&self.x, u)
    }

    fn step(&mut self, u: T, t: T, dt: T) -> Result<(), SimError> {
        if self.x.is_empty() {
            return Ok(());
        }
        let real = &self.real;
        self.rk
            .step(|x, _t, dx| real.derivative(x, u, dx), &mut self.x, t, dt)
            .map_err(crate::lti::LtiError::from)?;
        Ok(())
    }
}

/// Discrete coloured disturbance at the sensor frame rate.
struct Shaper<T> {
    c: T,
    d: T,
    gain: T,
    std: T,
    v_prev: T,
    e_prev: T,
}

impl<T: Scalar> Shaper<T> {
    fn sample(&mut self, rng: &mut ChaCha8Rng) -> T {
        let z: f64 = StandardNormal.sample(rng);
        let e = self.std * T::lit(z);
        let v = -self.d * self.v_prev + self.gain * (e + self.c * self.e_prev);
        self.v_prev = v;
        self.e_prev = e;
        v
    }
}

/// Closed-loop tracking with the exact plant delay and direct sensing.
pub fn simulate_closed_loop<T: Scalar>(
    topology: &LoopTopology<T>,
    traj: &Trajectory<T>,
    cfg: &SimConfig<T>,
) -> Result<SimTrace<T>, SimError> {
    Ok(simulate_closed_loop_with(topology, traj, cfg, SensorPath::Direct)?.trace)
}

/// Closed-loop tracking with a chosen sensor path.
///
/// Each control step of `dt` applies `PID -> inner PI -> saturation -> delay line -> plant`,
/// advances the plant with RK2, then produces every sensor frame falling inside the step.
/// Frames are height readings from [`depth_sensor_sample`] (plus the optional coloured
/// disturbance), optionally carried over the link, and smoothed by the moving average. The
/// controller always sees the most recent filtered frame.
pub fn simulate_closed_loop_with<T: Scalar>(
    topology: &LoopTopology<T>,
    traj: &Trajectory<T>,
    cfg: &SimConfig<T>,
    mut path: SensorPath<'_>,
) -> Result<SimRun<T>, SimError> {
    cfg.validate()?;
    let dt = cfg.dt;
    let ten = T::lit(10.0);
    let plant_tf = &topology.plant;
    let mut plant = Plant {
        real: CanonicalRealization::new(&plant_tf.without_delay())?,
        x: vec![T::zero(); plant_tf.den_degree()],
        rk: Rk2::new(plant_tf.den_degree()),
    };
    let mut delay = DelayLine::for_delay(plant_tf.delay(), dt, T::zero());
    let mut ctrl = Cascade::new(topology.feedforward, topology.inner_controller)?;
    let mapping = SensorMapping {
        mount_height_mm: cfg.mount_height_mm,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fir = FirFilter::new(moving_average::<T>(cfg.fir_taps))?;
    let rest_mm = cfg.rest_height_cm * ten;
    let frame_dt = T::one() / cfg.sensor_rate;
    let mut shaper = cfg.disturbance.map(|d| {
        let (c, dd) = d.shaping.discretize(frame_dt);
        let k = T::lit(2.0) / frame_dt;
        Shaper {
            c,
            d: dd,
            gain: (k + d.shaping.c0) / (k + d.shaping.d0),
            std: d.std_mm,
            v_prev: T::zero(),
            e_prev: T::zero(),
        }
    });
    let mut receiver = Receiver::new(u64::MAX, Some(rest_mm.as_f64()));
    let mut sent = 0u64;
    let mut frames = 0u64;
    let mut out_of_range_frames = 0u64;
    let mut saturated_steps = 0u64;

    let mut frame = |j: u64, y_cm: T, path: &mut SensorPath<'_>| -> Result<T, SimError> {
        let dist = shaper.as_mut().map_or(T::zero(), |s| s.sample(&mut rng));
        let reading = depth_sensor_sample(y_cm + dist / ten, &mapping, cfg, &mut rng);
        frames += 1;
        if reading.out_of_range {
            out_of_range_frames += 1;
        }
        let value = match path {
            SensorPath::Direct => reading.height_mm,
            SensorPath::Link { tx, rx, wait } => {
                let status = STATUS_TRACKING_VALID
                    | if reading.out_of_range {
                        STATUS_OUT_OF_RANGE
                    } else {
                        0
                    };
                let ts = (j as f64 * 1e6 / cfg.sensor_rate.as_f64()).round() as u64;
                let pkt = DepthPacket {
                    seq: j as u32,
                    timestamp_us: ts,
                    depth_mm: reading.height_mm.as_f64(),
                    status,
                };
                tx.send(&encode_packet(&pkt))?;
                sent += 1;
                tx.tick()?;
                let mut raw = rx.drain()?;
                if raw.is_empty() && !wait.is_zero() {
                    raw.extend(rx.recv(*wait)?);
                    raw.extend(rx.drain()?);
                }
                let pkts: Vec<DepthPacket> =
                    raw.iter().filter_map(|b| decode_packet(b).ok()).collect();
                let d = receiver.frame(&pkts)?.expect("receiver has a default");
                T::lit(d)
            }
        };
        Ok(fir.push(value))
    };

    let steps = cfg.steps();
    let mut trace = SimTrace::default();
    let mut y_dev = plant.output(T::zero());
    let mut y_meas = frame(0, (rest_mm + y_dev) / ten, &mut path)?;
    let mut next_frame = 1u64;
    let rate = cfg.sensor_rate;
    let limit = ten * cfg.mount_height_mm;
    for k in 0..steps {
        let t = T::from_usize_lossy(k) * dt;
        let r = traj.setpoint_at(t);
        let e_mm = r * ten - y_meas;
        let (u, saturated) = ctrl.update(e_mm, y_meas - rest_mm, dt, cfg);
        if saturated {
            saturated_steps += 1;
        }
        trace.push(t, r, e_mm / ten, u, (rest_mm + y_dev) / ten, y_meas / ten);
        let w = delay.push(u - cfg.u_bias);
        let y0 = y_dev;
        plant.step(w, t, dt)?;
        y_dev = plant.output(w);
        let t1 = t + dt;
        let y_abs = rest_mm + y_dev;
        if !y_abs.is_finite() || y_abs.abs() > limit {
            return Err(SimError::Diverged {
                t: t1.as_f64(),
                trace: Box::new(trace.to_f64()),
            });
        }
        loop {
            let tf = T::from_usize_lossy(next_frame as usize) / rate;
            if tf > t1 + dt * T::lit(1e-9) {
                break;
            }
            let a = ((tf - t) / dt).max(T::zero()).min(T::one());
            let y_frame = rest_mm + y0 + a * (y_dev - y0);
            y_meas = frame(next_frame, y_frame / ten, &mut path)?;
            next_frame += 1;
        }
    }
    let link = match path {
        SensorPath::Direct => None,
        SensorPath::Link { .. } => Some(LinkStats {
            sent,
            ..*receiver.stats()
        }),
    };
    Ok(SimRun {
        trace,
        link,
        frames,
        out_of_range_frames,
        saturated_steps,
    })
}
