use num_complex::Complex;
use rustfft::FftPlanner;

use super::record::mean;
use super::{SignalError, SignalRecord};
use crate::lti::FrequencyResponse;
use crate::Scalar;

/// One-sided power spectral density on a rad/s grid.
///
/// Density units are signal²·s/rad, so `sum(density) * delta_omega` approximates the variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum<T> {
    pub omega: Vec<T>,
    pub density: Vec<T>,
    pub delta_omega: T,
}

impl<T: Scalar> PowerSpectrum<T> {
    pub fn total_power(&self) -> T {
        self.density.iter().copied().sum::<T>() * self.delta_omega
    }

    /// Power carried by bins at or above `omega`.
    pub fn power_above(&self, omega: T) -> T {
        self.omega
            .iter()
            .zip(&self.density)
            .filter(|(w, _)| **w >= omega)
            .map(|(_, p)| *p)
            .sum::<T>()
            * self.delta_omega
    }

    pub fn peak_omega(&self) -> T {
        let mut best = 0;
        for i in 1..self.density.len() {
            if self.density[i] > self.density[best] {
                best = i;
            }
        }
        self.omega[best]
    }

    /// Bode-style view: `10 log10(density)` in the magnitude column, zero phase.
    pub fn to_frequency_response(&self) -> FrequencyResponse<T> {
        FrequencyResponse {
            omega: self.omega.clone(),
            magnitude_db: self
                .density
                .iter()
                .map(|p| T::lit(10.0) * p.log10())
                .collect(),
            phase_deg: vec![T::zero(); self.omega.len()],
        }
    }
}

/// Welch averaged periodogram with periodic Hann windows.
///
/// Each segment has its own mean removed before windowing.
pub fn psd_welch<T: Scalar>(
    x: &SignalRecord<T>,
    segment_len: usize,
    overlap: T,
) -> Result<PowerSpectrum<T>, SignalError> {
    let n = x.len();
    if segment_len < 2 {
        return Err(SignalError::InvalidWelch(format!(
            "segment length {segment_len} < 2"
        )));
    }
    if segment_len > n {
        return Err(SignalError::SegmentTooLong {
            segment: segment_len,
            len: n,
        });
    }
    if !(overlap >= T::zero() && overlap < T::one()) {
        return Err(SignalError::InvalidWelch(format!(
            "overlap {overlap} outside [0, 1)"
        )));
    }
    let l = segment_len;
    let shift = (T::from_usize_lossy(l) * overlap)
        .round()
        .to_usize()
        .unwrap_or(0);
    let step = (l - shift.min(l - 1)).max(1);
    let two_pi = T::PI() + T::PI();
    let window: Vec<T> = (0..l)
        .map(|i| {
            let ph = two_pi * T::from_usize_lossy(i) / T::from_usize_lossy(l);
            T::lit(0.5) - T::lit(0.5) * ph.cos()
        })
        .collect();
    let wss = window.iter().map(|&w| w * w).sum::<T>();
    let fft = FftPlanner::new().plan_fft_forward(l);
    let bins = l / 2 + 1;
    let mut acc = vec![T::zero(); bins];
    let mut count = 0usize;
    let mut buf = vec![Complex::new(T::zero(), T::zero()); l];
    let samples = x.samples();
    let mut start = 0;
    while start + l <= n {
        let seg = &samples[start..start + l];
        let m = mean(seg);
        for i in 0..l {
            buf[i] = Complex::new((seg[i] - m) * window[i], T::zero());
        }
        fft.process(&mut buf);
        for k in 0..bins {
            acc[k] += buf[k].norm_sqr();
        }
        count += 1;
        start += step;
    }
    let fs = T::one() / x.dt();
    // per-Hz density, then converted to per rad/s
    let scale = T::one() / (fs * wss * T::from_usize_lossy(count) * two_pi);
    let mut density: Vec<T> = acc.iter().map(|&p| p * scale).collect();
    for (k, d) in density.iter_mut().enumerate() {
        let nyquist = l.is_multiple_of(2) && k == l / 2;
        if k != 0 && !nyquist {
            *d *= T::lit(2.0);
        }
    }
    let delta_omega = two_pi * fs / T::from_usize_lossy(l);
    let omega = (0..bins)
        .map(|k| T::from_usize_lossy(k) * delta_omega)
        .collect();
    Ok(PowerSpectrum {
        omega,
        density,
        delta_omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_peak_and_power() {
        let dt = 0.1;
        let w0 = 2.0;
        let x: Vec<f64> = (0..8192).map(|i| (w0 * i as f64 * dt).sin()).collect();
        let p = psd_welch(&SignalRecord::new(x, dt).unwrap(), 1024, 0.5).unwrap();
        assert!((p.peak_omega() - w0).abs() <= p.delta_omega);
        // variance of a unit sine is 1/2
        assert!((p.total_power() - 0.5).abs() < 0.025);
    }

    #[test]
    fn parameter_errors() {
        let r = SignalRecord::new(vec![0.0f64; 10], 1.0).unwrap();
        assert!(matches!(
            psd_welch(&r, 11, 0.5),
            Err(SignalError::SegmentTooLong { .. })
        ));
        assert!(psd_welch(&r, 4, 1.0).is_err());
    }
}
