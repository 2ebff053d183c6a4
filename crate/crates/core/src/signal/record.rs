use super::SignalError;
use crate::linalg::{Matrix, Qr};
use crate::Scalar;

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord<T> {
    samples: Vec<T>,
    dt: T,
}

impl<T: Scalar> SignalRecord<T> {
    pub fn new(samples: Vec<T>, dt: T) -> Result<Self, SignalError> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(SignalError::InvalidDt(dt.as_f64()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(Self { samples, dt })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> T {
        T::from_usize_lossy(self.samples.len()) * self.dt
    }

    pub fn mean(&self) -> T {
        mean(&self.samples)
    }

    /// Same sampling interval, new samples.
    pub(crate) fn with_samples(&self, samples: Vec<T>) -> Self {
        Self {
            samples,
            dt: self.dt,
        }
    }
}

pub(crate) fn mean<T: Scalar>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    x.iter().copied().sum::<T>() / T::from_usize_lossy(x.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetrendResult<T> {
    pub detrended: SignalRecord<T>,
    pub mean: T,
    /// Offset and slope on the `t/N` ramp; zero for plain mean removal.
    pub trend_params: [T; 2],
}

pub fn remove_mean<T: Scalar>(x: &SignalRecord<T>) -> Result<DetrendResult<T>, SignalError> {
    if x.is_empty() {
        return Err(SignalError::Empty);
    }
    let m = x.mean();
    let out = x.samples.iter().map(|&v| v - m).collect();
    Ok(DetrendResult {
        detrended: x.with_samples(out),
        mean: m,
        trend_params: [T::zero(); 2],
    })
}

/// Least-squares removal of `theta0 + theta1 * k/N`, `k = 1..N`.
pub fn remove_linear_trend<T: Scalar>(
    x: &SignalRecord<T>,
) -> Result<DetrendResult<T>, SignalError> {
    let n = x.len();
    if n < 2 {
        return Err(SignalError::TooShort { need: 2, got: n });
    }
    let nn = T::from_usize_lossy(n);
    let ramp: Vec<T> = (1..=n).map(|k| T::from_usize_lossy(k) / nn).collect();
    let ones = vec![T::one(); n];
    let a = Matrix::from_columns(&[&ones, &ramp])?;
    let theta = Qr::new(&a)?.solve(&x.samples)?;
    let out = x
        .samples
        .iter()
        .zip(&ramp)
        .map(|(&v, &r)| v - theta[0] - theta[1] * r)
        .collect();
    Ok(DetrendResult {
        detrended: x.with_samples(out),
        mean: x.mean(),
        trend_params: [theta[0], theta[1]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(v: Vec<f64>) -> SignalRecord<f64> {
        SignalRecord::new(v, 0.1).unwrap()
    }

    #[test]
    fn mean_removal() {
        let r = remove_mean(&rec(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(r.mean, 2.0);
        assert_eq!(r.detrended.samples(), &[-1.0, 0.0, 1.0]);
        let c = remove_mean(&rec(vec![4.5; 7])).unwrap();
        assert!(c.detrended.samples().iter().all(|&v| v == 0.0));
        assert!(matches!(remove_mean(&rec(vec![])), Err(SignalError::Empty)));
    }

    #[test]
    fn ramp_is_removed_exactly() {
        let n = 500;
        let x: Vec<f64> = (1..=n).map(|k| 3.0 + 7.0 * k as f64 / n as f64).collect();
        let r = remove_linear_trend(&rec(x)).unwrap();
        assert!(r.detrended.samples().iter().all(|v| v.abs() < 1e-9));
        assert!((r.trend_params[0] - 3.0).abs() < 1e-9);
        assert!((r.trend_params[1] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn short_record_is_rejected() {
        assert!(matches!(
            remove_linear_trend(&rec(vec![1.0])),
            Err(SignalError::TooShort { need: 2, got: 1 })
        ));
    }

    #[test]
    fn rejects_bad_dt_and_nan() {
        assert!(SignalRecord::new(vec![1.0], 0.0).is_err());
        assert!(matches!(
            SignalRecord::new(vec![1.0, f64::NAN], 1.0),
            Err(SignalError::NonFinite(1))
        ));
    }
}
