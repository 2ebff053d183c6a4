use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{SimConfig, SimError};
use crate::kv::KvDoc;
use crate::lti::{lsim, TransferFunction};
use crate::signal::SignalRecord;
use crate::sysid::{DatasetZN, Role};
use crate::Scalar;

/// Highest frequency the excitation may contain, Hz.
pub const BAND_LIMIT_HZ: f64 = 10.0;

/// Band-limited rising sawtooth valve current with measurement noise levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SawtoothSpec<T> {
    /// Period, s.
    pub period: T,
    /// Peak deviation from `offset`, mA.
    pub amplitude: T,
    /// Mean current, mA.
    pub offset: T,
    /// Harmonics above this frequency are omitted; `None` uses `min(10 Hz, 0.8 Nyquist)`.
    pub cutoff_hz: Option<T>,
    pub samples: usize,
    /// SNR of white ripple on the applied current; `None` or infinite for a clean sawtooth.
    pub input_snr_db: Option<T>,
    /// SNR of white noise on the measured height; `None` or infinite for noiseless output.
    pub output_snr_db: Option<T>,
}

impl<T: Scalar> Default for SawtoothSpec<T> {
    fn default() -> Self {
        Self {
            period: T::lit(20.0),
            amplitude: T::lit(40.0),
            offset: T::lit(82.5),
            cutoff_hz: None,
            samples: 8800,
            input_snr_db: Some(T::lit(20.0)),
            output_snr_db: Some(T::lit(30.0)),
        }
    }
}

pub const SAWTOOTH_KEYS: [&str; 7] = [
    "saw_period",
    "saw_amplitude",
    "saw_offset",
    "cutoff_hz",
    "samples",
    "input_snr_db",
    "output_snr_db",
];

impl<T: Scalar> SawtoothSpec<T> {
    /// Reads the keys of [`SAWTOOTH_KEYS`] present in `doc`; `inf` disables a noise source.
    pub fn from_kv(doc: &KvDoc) -> Result<Self, SimError> {
        let mut s = Self::default();
        if let Some(v) = doc.get_f64("saw_period")? {
            s.period = T::lit(v);
        }
        if let Some(v) = doc.get_f64("saw_amplitude")? {
            s.amplitude = T::lit(v);
        }
        if let Some(v) = doc.get_f64("saw_offset")? {
            s.offset = T::lit(v);
        }
        if let Some(v) = doc.get_f64("cutoff_hz")? {
            s.cutoff_hz = Some(T::lit(v));
        }
        if let Some(n) = doc.get_u64("samples")? {
            s.samples = n as usize;
        }
        if let Some(v) = doc.get_f64("input_snr_db")? {
            s.input_snr_db = Some(T::lit(v));
        }
        if let Some(v) = doc.get_f64("output_snr_db")? {
            s.output_snr_db = Some(T::lit(v));
        }
        if !(s.period > T::zero() && s.period.is_finite()) {
            return Err(doc.error_at("saw_period", "saw_period must be > 0").into());
        }
        if s.samples < 2 {
            return Err(doc.error_at("samples", "samples must be >= 2").into());
        }
        Ok(s)
    }

    fn cutoff(&self, dt: T) -> Result<T, SimError> {
        let nyquist = T::lit(0.5) / dt;
        match self.cutoff_hz {
            None => Ok(T::lit(BAND_LIMIT_HZ).min(T::lit(0.8) * nyquist)),
            Some(c) if c > T::lit(BAND_LIMIT_HZ) => Err(SimError::BandLimit {
                cutoff_hz: c.as_f64(),
                limit_hz: BAND_LIMIT_HZ,
            }),
            Some(c) if !(c > T::zero()) || c >= nyquist => Err(SimError::InvalidConfig(format!(
                "cutoff {c} Hz must lie in (0, {nyquist}) Hz for dt = {dt}"
            ))),
            Some(c) => Ok(c),
        }
    }

    /// Clean waveform `offset + amplitude * s(t)` sampled at `dt`, where `s` is the Fourier
    /// series of a rising unit sawtooth truncated at the cutoff.
    pub fn waveform(&self, dt: T) -> Result<Vec<T>, SimError> {
        let cutoff = self.cutoff(dt)?;
        let harmonics = (cutoff * self.period)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .max(1);
        let two_pi = T::lit(2.0) * T::PI();
        let c = T::lit(2.0) / T::PI();
        Ok((0..self.samples)
            .map(|i| {
                let t = T::from_usize_lossy(i) * dt;
                let mut s = T::zero();
                for k in 1..=harmonics {
                    let kk = T::from_usize_lossy(k);
                    let sign = if k % 2 == 0 { -T::one() } else { T::one() };
                    s += sign * (two_pi * kk * t / self.period).sin() / kk;
                }
                self.offset + self.amplitude * c * s
            })
            .collect())
    }
}

fn noise_std<T: Scalar>(signal_dev: &[T], snr_db: Option<T>) -> T {
    match snr_db {
        Some(snr) if snr.is_finite() => {
            let n = T::from_usize_lossy(signal_dev.len());
            let rms = (signal_dev.iter().map(|&v| v * v).sum::<T>() / n).sqrt();
            rms / T::lit(10.0).powf(snr / T::lit(20.0))
        }
        _ => T::zero(),
    }
}

/// Open-loop identification record for `plant` driven by a sawtooth valve current.
///
/// The plant starts at rest with the head at `cfg.rest_height_cm`, the steady state for a
/// current equal to the waveform offset. `u` is the applied current (mA) including ripple and
/// `y` the measured head height (mm). Noise is seeded from `cfg.seed`.
pub fn open_loop_excite<T: Scalar>(
    plant: &TransferFunction<T>,
    waveform: &SawtoothSpec<T>,
    cfg: &SimConfig<T>,
) -> Result<DatasetZN<T>, SimError> {
    cfg.validate()?;
    let dt = cfg.dt;
    let clean = waveform.waveform(dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gauss = |s: T| {
        let z: f64 = StandardNormal.sample(&mut rng);
        s * T::lit(z)
    };
    let dev: Vec<T> = clean.iter().map(|&v| v - waveform.offset).collect();
    let su = noise_std(&dev, waveform.input_snr_db);
    let u_dev: Vec<T> = dev.iter().map(|&v| v + gauss(su)).collect();
    let y_dev = lsim(plant, &u_dev, dt)?;
    let sy = noise_std(&y_dev, waveform.output_snr_db);
    let rest = cfg.rest_height_cm * T::lit(10.0);
    let y: Vec<T> = y_dev.iter().map(|&v| rest + v + gauss(sy)).collect();
    let u: Vec<T> = u_dev.iter().map(|&v| waveform.offset + v).collect();
    Ok(DatasetZN::new(
        SignalRecord::new(u, dt)?,
        SignalRecord::new(y, dt)?,
        Role::Estimation,
    )?)
}
