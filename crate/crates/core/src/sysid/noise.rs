use super::{NoiseModel, SysidError};
use crate::linalg::{lstsq, Matrix};
use crate::signal::{ar_fit, SignalRecord};
use crate::Scalar;

/// Lags used by the portmanteau whiteness checks.
const WHITENESS_LAGS: usize = 20;
/// 95% quantile of chi-square with 20 degrees of freedom.
const CHI2_95_DF20: f64 = 31.410;
/// 95% quantile of chi-square with 18 degrees of freedom (two ARMA parameters fitted).
const CHI2_95_DF18: f64 = 28.869;

/// Ljung-Box statistic `Q = N (N + 2) sum_{k=1..h} rho_k^2 / (N - k)` of the mean-removed
/// sequence.
pub fn ljung_box<T: Scalar>(x: &[T], lags: usize) -> T {
    let n = x.len();
    if n <= lags + 1 {
        return T::infinity();
    }
    let m = x.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    let c: Vec<T> = x.iter().map(|&v| v - m).collect();
    let c0 = c.iter().map(|&v| v * v).sum::<T>();
    if c0 == T::zero() {
        return T::zero();
    }
    let nn = T::from_usize_lossy(n);
    let mut q = T::zero();
    for k in 1..=lags {
        let rk = (k..n).map(|t| c[t] * c[t - k]).sum::<T>() / c0;
        q += rk * rk / T::from_usize_lossy(n - k);
    }
    nn * (nn + T::lit(2.0)) * q
}

/// Discrete ARMA(1,1) shaping `(1 + c q^-1) / (1 + d q^-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Arma11<T> {
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Arma11<T> {
    /// Inverse filter `e(t) = v(t) + d v(t-1) - c e(t-1)` from rest.
    pub fn whiten(&self, v: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(v.len());
        let (mut vp, mut ep) = (T::zero(), T::zero());
        for &x in v {
            let e = x + self.d * vp - self.c * ep;
            out.push(e);
            vp = x;
            ep = e;
        }
        out
    }
}

fn cost<T: Scalar>(v: &[T], m: &Arma11<T>) -> T {
    m.whiten(v).iter().map(|&e| e * e).sum()
}

/// Hannan-Rissanen start followed by Gauss-Newton on the prediction errors.
pub(crate) fn fit_arma11<T: Scalar>(v: &[T], dt: T) -> Result<Arma11<T>, SysidError> {
    let p = WHITENESS_LAGS;
    let long = ar_fit(&SignalRecord::new(v.to_vec(), dt)?, p)?;
    let ehat = long.apply(v);
    // ehat[i] corresponds to v[i + p]
    let rows = v.len() - p - 1;
    let mut a = Matrix::zeros(rows, 2);
    let mut b = Vec::with_capacity(rows);
    for r in 0..rows {
        let t = r + p + 1;
        a[(r, 0)] = ehat[t - 1 - p];
        a[(r, 1)] = -v[t - 1];
        b.push(v[t]);
    }
    let th = lstsq(&a, &b)?;
    let lim = T::lit(0.999);
    let clamp = |x: T| x.max(-lim).min(lim);
    let mut m = Arma11 {
        c: clamp(th[0]),
        d: clamp(th[1]),
    };
    let mut best = cost(v, &m);
    for _ in 0..50 {
        let e = m.whiten(v);
        let (mut gc, mut gd) = (T::zero(), T::zero());
        let (mut jcc, mut jcd, mut jdd) = (T::zero(), T::zero(), T::zero());
        let (mut g1, mut g2) = (T::zero(), T::zero());
        let (mut vp, mut ep) = (T::zero(), T::zero());
        for (t, &x) in v.iter().enumerate() {
            // sensitivities of e(t) to c and d
            let dc = -ep - m.c * gc;
            let dd = vp - m.c * gd;
            gc = dc;
            gd = dd;
            jcc += dc * dc;
            jcd += dc * dd;
            jdd += dd * dd;
            g1 += dc * e[t];
            g2 += dd * e[t];
            vp = x;
            ep = e[t];
        }
        let det = jcc * jdd - jcd * jcd;
        if det.abs() <= T::eps() * jcc * jdd {
            break;
        }
        let sc = -(jdd * g1 - jcd * g2) / det;
        let sd = -(jcc * g2 - jcd * g1) / det;
        let mut step = T::one();
        let mut improved = false;
        for _ in 0..20 {
            let cand = Arma11 {
                c: clamp(m.c + step * sc),
                d: clamp(m.d + step * sd),
            };
            let cc = cost(v, &cand);
            if cc < best {
                m = cand;
                improved = cc < best * (T::one() - T::lit(1e-12));
                best = cc;
                break;
            }
            step *= T::lit(0.5);
        }
        if !improved {
            break;
        }
    }
    Ok(m)
}

/// First-order ARMA noise shaping fitted to process-model residuals.
///
/// Residuals that already pass the Ljung-Box whiteness test at 20 lags give the identity
/// model. Otherwise a discrete ARMA(1,1) is fitted and mapped to `(s + c0)/(s + d0)` with the
/// bilinear transform; if its innovations are still not white the model class is reported as
/// insufficient.
pub fn fit_noise_model<T: Scalar>(alpha: &SignalRecord<T>) -> Result<NoiseModel<T>, SysidError> {
    let n = alpha.len();
    let need = 10 * WHITENESS_LAGS + 2;
    if n < need {
        return Err(SysidError::TooShort { n, d: need });
    }
    let m = alpha.mean();
    let v: Vec<T> = alpha.samples().iter().map(|&x| x - m).collect();
    if ljung_box(&v, WHITENESS_LAGS).as_f64() < CHI2_95_DF20 {
        return Ok(NoiseModel::identity());
    }
    let arma = fit_arma11(&v, alpha.dt())?;
    let e = arma.whiten(&v);
    let q = ljung_box(&e[WHITENESS_LAGS..], WHITENESS_LAGS).as_f64();
    if !(q < CHI2_95_DF18) {
        return Err(SysidError::NoiseModelInsufficient {
            q,
            critical: CHI2_95_DF18,
        });
    }
    NoiseModel::from_discrete(arma.c, arma.d, alpha.dt())
}
