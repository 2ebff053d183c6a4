use std::fmt::Write as _;

use super::record::mean;
use super::{SignalError, SignalRecord};
use crate::Scalar;

/// Normalized correlation values over integer lags.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries<T> {
    pub lags: Vec<i64>,
    pub values: Vec<T>,
    /// `1.96 / sqrt(N)`
    pub band_95: T,
}

impl<T: Scalar> CorrelationSeries<T> {
    pub fn at(&self, lag: i64) -> Option<T> {
        self.lags
            .iter()
            .position(|&l| l == lag)
            .map(|i| self.values[i])
    }

    /// Lag with the largest absolute value.
    pub fn peak_lag(&self) -> i64 {
        let mut best = 0;
        for i in 1..self.values.len() {
            if self.values[i].abs() > self.values[best].abs() {
                best = i;
            }
        }
        self.lags[best]
    }

    /// Fraction of lags in `lo..=hi` whose value lies within `±band`.
    pub fn fraction_inside(&self, band: T, lo: i64, hi: i64) -> f64 {
        let sel: Vec<T> = self
            .lags
            .iter()
            .zip(&self.values)
            .filter(|(l, _)| **l >= lo && **l <= hi)
            .map(|(_, v)| *v)
            .collect();
        if sel.is_empty() {
            return 0.0;
        }
        sel.iter().filter(|v| v.abs() <= band).count() as f64 / sel.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lag,value,band_95\n");
        for (l, v) in self.lags.iter().zip(&self.values) {
            let _ = writeln!(s, "{l},{v},{}", self.band_95);
        }
        s
    }
}

fn centered<T: Scalar>(x: &[T]) -> (Vec<T>, T) {
    let m = mean(x);
    let c: Vec<T> = x.iter().map(|&v| v - m).collect();
    let ss = c.iter().map(|&v| v * v).sum::<T>();
    (c, ss)
}

fn band<T: Scalar>(n: usize) -> T {
    T::lit(1.96) / T::from_usize_lossy(n).sqrt()
}

/// Normalized cross-correlation
/// `psi_uy(tau) = sum_t (u(t-tau) - ū)(y(t) - ȳ) / (sqrt(sum (u-ū)^2) sqrt(sum (y-ȳ)^2))`
/// for `tau = -max_lag..=max_lag`. A positive peak lag means `y` lags `u`.
pub fn ccf<T: Scalar>(
    u: &SignalRecord<T>,
    y: &SignalRecord<T>,
    max_lag: usize,
) -> Result<CorrelationSeries<T>, SignalError> {
    let n = u.len();
    if y.len() != n {
        return Err(SignalError::LengthMismatch(n, y.len()));
    }
    if n == 0 {
        return Err(SignalError::Empty);
    }
    if max_lag >= n {
        return Err(SignalError::MaxLag { max_lag, len: n });
    }
    let (uc, su) = centered(u.samples());
    let (yc, sy) = centered(y.samples());
    if su == T::zero() || sy == T::zero() {
        return Err(SignalError::ZeroVariance);
    }
    let denom = su.sqrt() * sy.sqrt();
    let m = max_lag as i64;
    let mut lags = Vec::with_capacity(2 * max_lag + 1);
    let mut values = Vec::with_capacity(2 * max_lag + 1);
    for tau in -m..=m {
        let mut acc = T::zero();
        if tau >= 0 {
            let k = tau as usize;
            for t in k..n {
                acc += uc[t - k] * yc[t];
            }
        } else {
            let k = (-tau) as usize;
            for t in 0..n - k {
                acc += uc[t + k] * yc[t];
            }
        }
        lags.push(tau);
        values.push((acc / denom).max(-T::one()).min(T::one()));
    }
    Ok(CorrelationSeries {
        lags,
        values,
        band_95: band(n),
    })
}

/// Normalized autocorrelation with the same lag range as [`ccf`]; exactly 1 at lag 0.
pub fn acf<T: Scalar>(
    u: &SignalRecord<T>,
    max_lag: usize,
) -> Result<CorrelationSeries<T>, SignalError> {
    let mut r = ccf(u, u, max_lag)?;
    let zero = r.lags.iter().position(|&l| l == 0).unwrap();
    r.values[zero] = T::one();
    Ok(r)
}
