use std::fmt::Write as _;
use std::io;

use num_complex::Complex;

use super::{CanonicalRealization, LtiError, TransferFunction};
use crate::ode::Rk2;
use crate::Scalar;

/// Uniformly or irregularly sampled scalar response `y(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub t: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(t: Vec<T>, y: Vec<T>) -> Result<Self, LtiError> {
        if t.len() != y.len() {
            return Err(LtiError::InvalidArgument(format!(
                "time and value lengths differ ({} vs {})",
                t.len(),
                y.len()
            )));
        }
        Ok(Self { t, y })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Linear interpolation; clamps outside the sampled range.
    pub fn sample(&self, at: T) -> T {
        interp(&self.t, &self.y, at)
    }

    pub fn last(&self) -> Option<T> {
        self.y.last().copied()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,y\n");
        for (t, y) in self.t.iter().zip(&self.y) {
            let _ = writeln!(s, "{t},{y}");
        }
        s
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

pub(crate) fn interp<T: Scalar>(t: &[T], y: &[T], at: T) -> T {
    if t.is_empty() {
        return T::nan();
    }
    if at <= t[0] {
        return y[0];
    }
    let last = t.len() - 1;
    if at >= t[last] {
        return y[last];
    }
    let k = t.partition_point(|&v| v <= at) - 1;
    let w = (at - t[k]) / (t[k + 1] - t[k]);
    y[k] + w * (y[k + 1] - y[k])
}

/// Unit-step response on `[0, horizon]`.
///
/// The rational part is integrated in controllable canonical form with [`Rk2`]; the delay is
/// applied afterwards as an exact time shift, so the output is identically zero before it.
pub fn step_response<T: Scalar>(
    tf: &TransferFunction<T>,
    horizon: T,
    dt: T,
) -> Result<TimeSeries<T>, LtiError> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(LtiError::InvalidArgument(format!(
            "dt must be > 0, got {dt}"
        )));
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(LtiError::InvalidArgument(format!(
            "horizon must be >= dt, got {horizon}"
        )));
    }
    let sys = CanonicalRealization::new(tf)?;
    let steps = (horizon / dt).round().to_usize().unwrap_or(0);
    let n = sys.order();
    let mut x = vec![T::zero(); n];
    let mut rk = Rk2::new(n);
    let u = T::one();
    let t: Vec<T> = (0..=steps).map(|i| T::from_usize_lossy(i) * dt).collect();
    let mut raw = Vec::with_capacity(steps + 1);
    raw.push(sys.output(&x, u));
    for i in 0..steps {
        rk.step(|x, _t, dx| sys.derivative(x, u, dx), &mut x, t[i], dt)?;
        raw.push(sys.output(&x, u));
    }
    let delay = tf.delay();
    let y = if delay == T::zero() {
        raw
    } else {
        t.iter()
            .map(|&ti| {
                if ti < delay {
                    T::zero()
                } else {
                    interp(&t, &raw, ti - delay)
                }
            })
            .collect()
    };
    Ok(TimeSeries { t, y })
}

/// Zero-state response to a sampled input held constant over each interval.
///
/// `y[i]` is the output at `t = i*dt`. The delay is applied as a whole number of samples,
/// `round(delay/dt)`, with zero input before the record starts.
pub fn lsim<T: Scalar>(tf: &TransferFunction<T>, u: &[T], dt: T) -> Result<Vec<T>, LtiError> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(LtiError::InvalidArgument(format!(
            "dt must be > 0, got {dt}"
        )));
    }
    let sys = CanonicalRealization::new(tf)?;
    let k = (tf.delay() / dt).round().to_usize().unwrap_or(0);
    let mut x = vec![T::zero(); sys.order()];
    let mut rk = Rk2::new(sys.order());
    let mut y = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let ui = if i >= k { u[i - k] } else { T::zero() };
        y.push(sys.output(&x, ui));
        let t = T::from_usize_lossy(i) * dt;
        rk.step(|x, _t, dx| sys.derivative(x, ui, dx), &mut x, t, dt)?;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics<T> {
    /// 10% to 90% of steady state, seconds.
    pub rise_time: T,
    /// Last entry into the ±2% band around steady state, seconds.
    pub settling_time: T,
    /// Percent above steady state; 0 for monotone responses.
    pub overshoot: T,
    pub steady_state: T,
}

/// Rise, settling and overshoot of a converged step response.
///
/// The final 10% of samples must lie within 2% of their mean, otherwise the series is
/// reported as having no steady state. The steady state itself is the last sample.
pub fn step_metrics<T: Scalar>(series: &TimeSeries<T>) -> Result<StepMetrics<T>, LtiError> {
    let n = series.len();
    if n < 2 {
        return Err(LtiError::InvalidArgument(
            "step series needs at least 2 samples".into(),
        ));
    }
    let (t, y) = (&series.t, &series.y);
    let tail = (n / 10).max(1);
    let mean = y[n - tail..].iter().copied().sum::<T>() / T::from_usize_lossy(tail);
    let band = T::lit(0.02) * mean.abs();
    if !mean.is_finite()
        || mean == T::zero()
        || y[n - tail..].iter().any(|&v| (v - mean).abs() > band)
    {
        return Err(LtiError::NoSteadyState);
    }
    let ss = y[n - 1];
    // normalized response, rises toward 1 regardless of sign of ss
    let r: Vec<T> = y.iter().map(|&v| v / ss).collect();
    let crossing = |level: T| -> T {
        if r[0] >= level {
            return t[0];
        }
        for k in 1..n {
            if r[k] >= level {
                let w = (level - r[k - 1]) / (r[k] - r[k - 1]);
                return t[k - 1] + w * (t[k] - t[k - 1]);
            }
        }
        t[n - 1]
    };
    let rise_time = crossing(T::lit(0.9)) - crossing(T::lit(0.1));

    let tol = T::lit(0.02);
    let outside = |k: usize| (r[k] - T::one()).abs() > tol;
    let settling_time = match (0..n).rev().find(|&k| outside(k)) {
        None => t[0],
        Some(k) if k + 1 >= n => t[n - 1],
        Some(k) => {
            // interpolate the band edge between sample k (outside) and k+1 (inside)
            let edge = if r[k] > T::one() {
                T::one() + tol
            } else {
                T::one() - tol
            };
            let w = (edge - r[k]) / (r[k + 1] - r[k]);
            t[k] + w.max(T::zero()).min(T::one()) * (t[k + 1] - t[k])
        }
    };
    let peak = r.iter().copied().fold(T::neg_infinity(), T::max);
    let overshoot = ((peak - T::one()) * T::lit(100.0)).max(T::zero());
    Ok(StepMetrics {
        rise_time: rise_time.max(T::zero()),
        settling_time,
        overshoot,
        steady_state: ss,
    })
}

/// Bode data: magnitude in dB and unwrapped phase in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse<T> {
    pub omega: Vec<T>,
    pub magnitude_db: Vec<T>,
    pub phase_deg: Vec<T>,
}

impl<T: Scalar> FrequencyResponse<T> {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Complex value at grid index `i`.
    pub fn value(&self, i: usize) -> Complex<T> {
        let mag = T::lit(10.0).powf(self.magnitude_db[i] / T::lit(20.0));
        Complex::from_polar(mag, self.phase_deg[i].to_radians())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega,mag_db,phase_deg\n");
        for i in 0..self.len() {
            let _ = writeln!(
                s,
                "{},{},{}",
                self.omega[i], self.magnitude_db[i], self.phase_deg[i]
            );
        }
        s
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            let f = T::from_usize_lossy(i) / T::from_usize_lossy(n - 1);
            T::lit(10.0).powf(a + (b - a) * f)
        })
        .collect()
}

pub(crate) fn check_grid<T: Scalar>(omega: &[T]) -> Result<(), LtiError> {
    if omega.iter().any(|w| !w.is_finite() || *w < T::zero())
        || omega.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(LtiError::InvalidGrid);
    }
    Ok(())
}

fn wrap_pi<T: Scalar>(x: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut v = x - two_pi * (x / two_pi).round();
    if v <= -T::PI() {
        v += two_pi;
    }
    v
}

/// Evaluates `num(jw)/den(jw) * exp(-jw*delay)` on the grid.
///
/// The rational phase is unwrapped by following the sum of the per-root angles, then anchored
/// so that its low-frequency asymptote lies in (-180°, 180°]. The delay contributes an exact
/// `-w*delay` on top.
pub fn freq_response<T: Scalar>(
    tf: &TransferFunction<T>,
    omega: &[T],
) -> Result<FrequencyResponse<T>, LtiError> {
    check_grid(omega)?;
    let poles = tf.poles()?;
    let zeros = tf.zeros()?;
    let pole_tol = T::lit(1e-12);
    for &w in omega {
        let hit = poles.iter().any(|p| {
            p.re.abs() <= pole_tol * T::one().max(p.norm())
                && (p.im - w).abs() <= pole_tol * T::one().max(w)
        });
        if hit {
            return Err(LtiError::PoleOnAxis { omega: w.as_f64() });
        }
    }
    let lead = if tf.is_zero() {
        T::zero()
    } else {
        tf.num()[0] / tf.den()[0]
    };
    let root_phase = |w: T| -> T {
        let s = Complex::new(T::zero(), w);
        let mut ph = if lead < T::zero() { T::PI() } else { T::zero() };
        for z in &zeros {
            ph += (s - z).arg();
        }
        for p in &poles {
            ph -= (s - p).arg();
        }
        ph
    };
    // Low-frequency asymptote K (jw)^m.
    let origin = |r: &&Complex<T>| r.re == T::zero() && r.im == T::zero();
    let m = zeros.iter().filter(origin).count() as i64 - poles.iter().filter(origin).count() as i64;
    // Real roots flip the sign when positive; complex pairs contribute |z|^2 > 0.
    let mut k_sign = lead.signum();
    for r in zeros.iter().filter(|r| !origin(r) && r.im == T::zero()) {
        if r.re > T::zero() {
            k_sign = -k_sign;
        }
    }
    for r in poles.iter().filter(|r| !origin(r) && r.im == T::zero()) {
        if r.re > T::zero() {
            k_sign = -k_sign;
        }
    }
    let half_pi = T::FRAC_PI_2();
    let anchor = wrap_pi(
        T::from_i64(m).unwrap() * half_pi
            + if k_sign < T::zero() {
                T::PI()
            } else {
                T::zero()
            },
    );
    let two_pi = T::PI() + T::PI();
    let probe = {
        let smallest = zeros
            .iter()
            .chain(poles.iter())
            .map(|r| r.norm())
            .filter(|v| *v > T::zero())
            .fold(T::one(), T::min);
        smallest * T::lit(1e-6)
    };
    let offset = two_pi * ((anchor - root_phase(probe)) / two_pi).round();

    let mut mag = Vec::with_capacity(omega.len());
    let mut phase = Vec::with_capacity(omega.len());
    for &w in omega {
        let s = Complex::new(T::zero(), w);
        let h = tf.eval_rational(s);
        if !h.re.is_finite() || !h.im.is_finite() {
            return Err(LtiError::PoleOnAxis { omega: w.as_f64() });
        }
        let reference = root_phase(w) + offset;
        let raw = h.arg();
        let ph = raw + two_pi * ((reference - raw) / two_pi).round();
        mag.push(T::lit(20.0) * h.norm().log10());
        phase.push((ph - w * tf.delay()).to_degrees());
    }
    Ok(FrequencyResponse {
        omega: omega.to_vec(),
        magnitude_db: mag,
        phase_deg: phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag() -> TransferFunction<f64> {
        TransferFunction::rational(vec![1.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn first_order_step_matches_exponential() {
        let s = step_response(&lag(), 5.0, 0.01).unwrap();
        assert_eq!(s.len(), 501);
        assert!((s.sample(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-3);
        let m = step_metrics(&step_response(&lag(), 12.0, 0.01).unwrap()).unwrap();
        assert_eq!(m.overshoot, 0.0);
        // 10-90 rise of a unit lag is ln 9
        assert!((m.rise_time - 9f64.ln()).abs() < 1e-2);
    }

    #[test]
    fn delay_is_an_exact_shift() {
        let d = TransferFunction::pure_delay(2.0f64).unwrap();
        let s = step_response(&d, 6.0, 0.01).unwrap();
        assert!(s.t.iter().zip(&s.y).all(|(t, y)| *t >= 2.0 || *y == 0.0));
        assert_eq!(s.last().unwrap(), 1.0);
        let m = step_metrics(&s).unwrap();
        assert!((m.settling_time - 2.0).abs() < 0.011);
    }

    #[test]
    fn improper_step_is_rejected() {
        let pid = TransferFunction::rational(vec![1.0, 1.0, 1.0], vec![1.0, 0.0]).unwrap();
        let err = step_response(&pid, 1.0, 0.1).unwrap_err();
        assert!(err.to_string().contains("derivative filter"));
    }

    #[test]
    fn diverging_series_has_no_steady_state() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let s = TimeSeries::new(t.clone(), t).unwrap();
        assert_eq!(step_metrics(&s), Err(LtiError::NoSteadyState));
    }

    #[test]
    fn overshoot_of_underdamped_system() {
        // zeta = 0.5 gives 16.3% overshoot
        let g = TransferFunction::rational(vec![1.0], vec![1.0, 1.0, 1.0]).unwrap();
        let m = step_metrics(&step_response(&g, 40.0, 0.005).unwrap()).unwrap();
        let expected = 100.0 * (-std::f64::consts::PI * 0.5 / 0.75f64.sqrt()).exp();
        assert!((m.overshoot - expected).abs() < 0.05, "{}", m.overshoot);
    }

    #[test]
    fn bode_corner_and_delay() {
        let r = freq_response(&lag(), &[1.0]).unwrap();
        assert!((r.magnitude_db[0] + 3.0103).abs() < 1e-4);
        assert!((r.phase_deg[0] + 45.0).abs() < 1e-9);
        let d = TransferFunction::pure_delay(2.0f64).unwrap();
        let r = freq_response(&d, &[1.0]).unwrap();
        assert!(r.magnitude_db[0].abs() < 1e-12);
        assert!((r.phase_deg[0] + 2f64.to_degrees()).abs() < 1e-9);
    }

    #[test]
    fn phase_unwraps_past_minus_180() {
        // triple lag: phase runs to -270
        let g = TransferFunction::rational(vec![1.0f64], vec![1.0, 3.0, 3.0, 1.0]).unwrap();
        let w = log_grid(1e-3, 1e3, 200);
        let r = freq_response(&g, &w).unwrap();
        assert!(r.phase_deg[0].abs() < 1.0);
        assert!((r.phase_deg[199] + 270.0).abs() < 1.0);
        assert!(r.phase_deg.windows(2).all(|p| p[1] <= p[0] + 1e-9));
    }

    #[test]
    fn integrator_anchor_and_pole_error() {
        let g = TransferFunction::rational(vec![1.0f64], vec![1.0, 0.0]).unwrap();
        let r = freq_response(&g, &[0.1, 10.0]).unwrap();
        assert!((r.phase_deg[0] + 90.0).abs() < 1e-9);
        assert!(matches!(
            freq_response(&g, &[0.0, 1.0]),
            Err(LtiError::PoleOnAxis { .. })
        ));
        let osc = TransferFunction::rational(vec![1.0], vec![1.0, 0.0, 4.0]).unwrap();
        match freq_response(&osc, &[1.0, 2.0]) {
            Err(LtiError::PoleOnAxis { omega }) => assert!((omega - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lsim_matches_step_response_on_grid() {
        let g = TransferFunction::new(vec![2.0f64, 1.0], vec![3.0, 4.0, 1.0], 0.5).unwrap();
        let s = step_response(&g, 10.0, 0.1).unwrap();
        let y = lsim(&g, &vec![1.0; 101], 0.1).unwrap();
        for (a, b) in s.y.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_headers() {
        let s = step_response(&lag(), 0.2, 0.1).unwrap();
        assert!(s.to_csv().starts_with("t,y\n"));
        let r = freq_response(&lag(), &[1.0]).unwrap();
        assert!(r.to_csv().starts_with("omega,mag_db,phase_deg\n"));
    }
}
