use std::collections::VecDeque;

use super::{SignalError, SignalRecord};
use crate::Scalar;

/// Equal-weight moving average with `taps` coefficients.
pub fn moving_average<T: Scalar>(taps: usize) -> Vec<T> {
    let w = T::one() / T::from_usize_lossy(taps.max(1));
    vec![w; taps.max(1)]
}

/// Point-by-point FIR filter.
///
/// Output `i` only uses inputs `<= i`. While fewer than `coeffs.len()` inputs are available
/// the truncated sum is rescaled by `sum(h) / sum(h_used)`, so a constant input passes at the
/// filter's DC gain from the first sample on. Once the history is full this is the plain
/// convolution `y_i = sum h_k x_{i-k}`.
#[derive(Debug, Clone)]
pub struct FirFilter<T> {
    coeffs: Vec<T>,
    total: T,
    history: VecDeque<T>,
}

impl<T: Scalar> FirFilter<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self, SignalError> {
        if coeffs.is_empty() {
            return Err(SignalError::EmptyCoefficients);
        }
        let total = coeffs.iter().copied().sum();
        let cap = coeffs.len();
        Ok(Self {
            coeffs,
            total,
            history: VecDeque::with_capacity(cap),
        })
    }

    pub fn taps(&self) -> usize {
        self.coeffs.len()
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }

    pub fn push(&mut self, x: T) -> T {
        if self.history.len() == self.coeffs.len() {
            self.history.pop_back();
        }
        self.history.push_front(x);
        let mut acc = T::zero();
        let mut used = T::zero();
        for (h, v) in self.coeffs.iter().zip(&self.history) {
            acc += *h * *v;
            used += *h;
        }
        if self.history.len() < self.coeffs.len() && used != T::zero() {
            acc * self.total / used
        } else {
            acc
        }
    }
}

pub fn fir_filter<T: Scalar>(
    x: &SignalRecord<T>,
    coeffs: &[T],
) -> Result<SignalRecord<T>, SignalError> {
    let mut f = FirFilter::new(coeffs.to_vec())?;
    let out = x.samples().iter().map(|&v| f.push(v)).collect();
    Ok(x.with_samples(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(v: Vec<f64>) -> SignalRecord<f64> {
        SignalRecord::new(v, 1.0).unwrap()
    }

    #[test]
    fn constant_passes_through_moving_average() {
        let y = fir_filter(&rec(vec![5.0; 50]), &moving_average(20)).unwrap();
        assert!(y.samples().iter().all(|v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn impulse_after_startup_returns_coefficients() {
        let h = [0.5, 0.3, 0.2];
        let mut x = vec![0.0; 8];
        x[2] = 1.0;
        let y = fir_filter(&rec(x), &h).unwrap();
        assert_eq!(&y.samples()[2..5], &h);
        assert!(y.samples()[5..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn alternating_signal_through_two_tap_average() {
        let x: Vec<f64> = (0..10)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let y = fir_filter(&rec(x), &[0.5, 0.5]).unwrap();
        assert_eq!(y.samples()[0], 1.0);
        assert!(y.samples()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_coefficients_error() {
        assert!(matches!(
            fir_filter(&rec(vec![1.0]), &[]),
            Err(SignalError::EmptyCoefficients)
        ));
    }
}
