use super::record::mean;
use super::{SignalError, SignalRecord};
use crate::linalg::{Matrix, Qr};
use crate::Scalar;

/// Autoregressive whitening filter `F(q^-1) = 1 + s_1 q^-1 + ... + s_n q^-n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArWhitener<T> {
    pub order: usize,
    /// `s_1 .. s_n`
    pub coeffs: Vec<T>,
    /// NRMSE fit of the one-step AR prediction on the data it was fit to, percent.
    pub fit_percent: T,
    /// Mean squared one-step residual.
    pub mse: T,
}

impl<T: Scalar> ArWhitener<T> {
    /// Identity filter of the given order.
    pub fn identity(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![T::zero(); order],
            fit_percent: T::zero(),
            mse: T::zero(),
        }
    }

    /// `e(t) = x(t) + sum s_i x(t-i)` for `t = order..N-1` (no startup samples).
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.order;
        if x.len() <= n {
            return Vec::new();
        }
        (n..x.len())
            .map(|t| {
                let mut e = x[t];
                for (i, &c) in self.coeffs.iter().enumerate() {
                    e += c * x[t - 1 - i];
                }
                e
            })
            .collect()
    }
}

/// Least-squares (covariance method) AR fit on the mean-removed record.
pub fn ar_fit<T: Scalar>(x: &SignalRecord<T>, order: usize) -> Result<ArWhitener<T>, SignalError> {
    if order == 0 {
        return Err(SignalError::ZeroOrder);
    }
    let need = 10 * order + 1;
    if x.len() < need {
        return Err(SignalError::TooShort { need, got: x.len() });
    }
    let m = x.mean();
    let xc: Vec<T> = x.samples().iter().map(|&v| v - m).collect();
    let rows = xc.len() - order;
    let mut a = Matrix::zeros(rows, order);
    for r in 0..rows {
        for i in 0..order {
            a[(r, i)] = -xc[r + order - 1 - i];
        }
    }
    let target = &xc[order..];
    let coeffs = Qr::new(&a)?.solve(target)?;
    let mut w = ArWhitener {
        order,
        coeffs,
        fit_percent: T::zero(),
        mse: T::zero(),
    };
    let e = w.apply(&xc);
    let tm = mean(target);
    let en = e.iter().map(|&v| v * v).sum::<T>();
    let dn = target.iter().map(|&v| (v - tm) * (v - tm)).sum::<T>();
    w.mse = en / T::from_usize_lossy(e.len());
    w.fit_percent = if dn > T::zero() {
        T::lit(100.0) * (T::one() - (en / dn).sqrt())
    } else {
        T::lit(100.0)
    };
    Ok(w)
}

/// Filters both records through `w`, dropping the first `order` samples of each.
pub fn prewhiten<T: Scalar>(
    u: &SignalRecord<T>,
    y: &SignalRecord<T>,
    w: &ArWhitener<T>,
) -> Result<(SignalRecord<T>, SignalRecord<T>), SignalError> {
    if u.len() != y.len() {
        return Err(SignalError::LengthMismatch(u.len(), y.len()));
    }
    if u.dt() != y.dt() {
        return Err(SignalError::DtMismatch(u.dt().as_f64(), y.dt().as_f64()));
    }
    if u.len() <= w.order {
        return Err(SignalError::TooShort {
            need: w.order + 1,
            got: u.len(),
        });
    }
    Ok((
        u.with_samples(w.apply(u.samples())),
        y.with_samples(w.apply(y.samples())),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_ar1_coefficient() {
        // x(t) = 0.8 x(t-1) + e(t) with a deterministic pseudo-random drive
        let mut s = 12345u64;
        let mut x = vec![0.0f64];
        for _ in 0..4000 {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let e = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            let prev = *x.last().unwrap();
            x.push(0.8 * prev + e);
        }
        let w = ar_fit(&SignalRecord::new(x, 1.0).unwrap(), 1).unwrap();
        assert!((w.coeffs[0] + 0.8).abs() < 0.03, "{:?}", w.coeffs);
        assert!(w.fit_percent > 0.0 && w.fit_percent < 100.0);
    }

    #[test]
    fn too_short_and_rank_deficient() {
        let r = SignalRecord::new(vec![1.0f64; 30], 1.0).unwrap();
        assert!(matches!(ar_fit(&r, 5), Err(SignalError::TooShort { .. })));
        assert!(matches!(ar_fit(&r, 2), Err(SignalError::RankDeficient(_))));
    }

    #[test]
    fn prewhiten_drops_startup() {
        let u = SignalRecord::new((0..20).map(|i| i as f64).collect(), 0.5).unwrap();
        let w = ArWhitener {
            order: 2,
            coeffs: vec![-1.0, 0.0],
            fit_percent: 0.0,
            mse: 0.0,
        };
        let (pu, py) = prewhiten(&u, &u, &w).unwrap();
        assert_eq!(pu.len(), 18);
        assert!(pu.samples().iter().all(|&v| v == 1.0));
        assert_eq!(pu, py);
    }
}
