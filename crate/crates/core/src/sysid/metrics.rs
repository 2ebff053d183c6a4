use super::{DatasetZN, ProcessModel, SysidError};
use crate::linalg::{Matrix, Qr};
use crate::lti::LtiError;
use crate::ode::Rk2;
use crate::signal::{acf, CorrelationSeries, SignalRecord};
use crate::Scalar;

/// Two-sided 95% normal quantile.
pub const BAND_95: f64 = 1.96;
/// Two-sided 99% normal quantile.
pub const BAND_99: f64 = 2.58;

/// Free parameters counted by the FPE: `Kp, Tz, Tp1, Tp2, Td`.
const FPE_PARAMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport<T> {
    /// `100 (1 - ||y - ŷ|| / ||y - ȳ||)`
    pub fit_percent: T,
    pub mse: T,
    /// Akaike final prediction error `V (1 + d/N) / (1 - d/N)`.
    pub fpe: T,
}

impl<T: Scalar> FitReport<T> {
    pub fn to_f64(&self) -> FitReport<f64> {
        FitReport {
            fit_percent: self.fit_percent.as_f64(),
            mse: self.mse.as_f64(),
            fpe: self.fpe.as_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport<T> {
    /// Residuals after the dead-time startup samples.
    pub alpha: SignalRecord<T>,
    /// `max |alpha|`
    pub s1: T,
    /// `sqrt(mean alpha^2)`
    pub s2: T,
    /// Residual/past-input covariance for `tau = 0..=max_lag`, normalized by `s2 * rms(u)`.
    pub r_alpha_u: CorrelationSeries<T>,
    /// Confidence band applied to `r_alpha_u`, i.e. `z / sqrt(N)`.
    pub band: T,
    /// At least 95% of the normalized covariances lie inside `band`.
    pub band_pass: bool,
    /// Residual autocorrelation (whiteness) with its own 95% band.
    pub alpha_acf: CorrelationSeries<T>,
}

/// Output error of `model` on `(u, y)` with a constant, a linear trend and the free response
/// from an unknown initial state removed by least squares.
pub(crate) fn nuisance_residual<T: Scalar>(
    model: &ProcessModel<T>,
    u: &[T],
    y: &[T],
    dt: T,
) -> Result<Vec<T>, SysidError> {
    let n = u.len();
    let yhat = model.simulate(u, dt)?;
    let r: Vec<T> = y.iter().zip(&yhat).map(|(a, b)| *a - *b).collect();
    let nn = T::from_usize_lossy(n);
    let ones = vec![T::one(); n];
    let ramp: Vec<T> = (1..=n).map(|k| T::from_usize_lossy(k) / nn).collect();
    let (f1, f2) = free_modes(model, n, dt)?;
    let m = Matrix::from_columns(&[&ones, &ramp, &f1, &f2])?;
    Ok(Qr::new(&m)?.project_out(&r))
}

fn free_modes<T: Scalar>(
    model: &ProcessModel<T>,
    n: usize,
    dt: T,
) -> Result<(Vec<T>, Vec<T>), SysidError> {
    let a2 = model.tp1 * model.tp2;
    let a1 = (model.tp1 + model.tp2) / a2;
    let a0 = T::one() / a2;
    let mut rk = Rk2::new(2);
    let mut run = |x0: [T; 2]| -> Result<Vec<T>, SysidError> {
        let mut x = x0;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(x[0]);
            let t = T::from_usize_lossy(i) * dt;
            rk.step(
                |x, _t, dx| {
                    dx[0] = x[1];
                    dx[1] = -a0 * x[0] - a1 * x[1];
                },
                &mut x,
                t,
                dt,
            )
            .map_err(LtiError::from)?;
        }
        Ok(out)
    };
    Ok((run([T::one(), T::zero()])?, run([T::zero(), T::one()])?))
}

fn norm2<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Fit%, MSE and FPE of `model` on `z`.
///
/// Residuals are output errors with trend and initial-condition terms estimated as
/// nuisance parameters, matching the estimator's criterion.
pub fn compute_metrics<T: Scalar>(
    z: &DatasetZN<T>,
    model: &ProcessModel<T>,
) -> Result<FitReport<T>, SysidError> {
    let n = z.len();
    if n <= FPE_PARAMS {
        return Err(SysidError::TooShort { n, d: FPE_PARAMS });
    }
    model.validate()?;
    let y = z.y.samples();
    let alpha = nuisance_residual(model, z.u.samples(), y, z.dt())?;
    let ym = z.y.mean();
    let dev: Vec<T> = y.iter().map(|&v| v - ym).collect();
    let (na, nd) = (norm2(&alpha), norm2(&dev));
    let fit_percent = if nd > T::zero() {
        T::lit(100.0) * (T::one() - na / nd)
    } else if na == T::zero() {
        T::lit(100.0)
    } else {
        T::neg_infinity()
    };
    let nn = T::from_usize_lossy(n);
    let mse = na * na / nn;
    let dn = T::from_usize_lossy(FPE_PARAMS) / nn;
    let fpe = mse * (T::one() + dn) / (T::one() - dn);
    Ok(FitReport {
        fit_percent,
        mse,
        fpe,
    })
}

/// Residual statistics of `model` on validation data with the 99% input-covariance band.
pub fn residual_analysis<T: Scalar>(
    z_v: &DatasetZN<T>,
    model: &ProcessModel<T>,
    max_lag: usize,
) -> Result<ResidualReport<T>, SysidError> {
    residual_analysis_with_band(z_v, model, max_lag, T::lit(BAND_99))
}

/// [`residual_analysis`] with an explicit normal quantile for the covariance band.
pub fn residual_analysis_with_band<T: Scalar>(
    z_v: &DatasetZN<T>,
    model: &ProcessModel<T>,
    max_lag: usize,
    z_value: T,
) -> Result<ResidualReport<T>, SysidError> {
    model.validate()?;
    let dt = z_v.dt();
    let u = z_v.u.samples();
    let full = nuisance_residual(model, u, z_v.y.samples(), dt)?;
    let startup = (model.td / dt)
        .round()
        .to_usize()
        .unwrap_or(0)
        .min(full.len());
    let alpha = full[startup..].to_vec();
    let n = alpha.len();
    if n <= max_lag + 1 {
        return Err(SysidError::TooShort { n, d: max_lag + 1 });
    }
    let nn = T::from_usize_lossy(n);
    let s1 = alpha.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let s2 = (alpha.iter().map(|&v| v * v).sum::<T>() / nn).sqrt();
    let um = u.iter().copied().sum::<T>() / T::from_usize_lossy(u.len());
    let uc: Vec<T> = u.iter().map(|&v| v - um).collect();
    let urms = (uc[startup..].iter().map(|&v| v * v).sum::<T>() / nn).sqrt();
    let scale = s2 * urms;
    let mut values = Vec::with_capacity(max_lag + 1);
    for tau in 0..=max_lag {
        let mut acc = T::zero();
        for (i, &a) in alpha.iter().enumerate() {
            let t = i + startup;
            if t >= tau {
                acc += a * uc[t - tau];
            }
        }
        let r = acc / nn;
        values.push(if scale > T::zero() {
            r / scale
        } else {
            T::zero()
        });
    }
    let band = z_value / nn.sqrt();
    let band_95 = T::lit(BAND_95) / nn.sqrt();
    let inside = values.iter().filter(|v| v.abs() <= band).count();
    let band_pass = inside as f64 >= 0.95 * values.len() as f64;
    let r_alpha_u = CorrelationSeries {
        lags: (0..=max_lag as i64).collect(),
        values,
        band_95,
    };
    let alpha = SignalRecord::new(alpha, dt)?;
    let alpha_acf = if s2 > T::zero() {
        acf(&alpha, max_lag)?
    } else {
        let m = max_lag as i64;
        CorrelationSeries {
            lags: (-m..=m).collect(),
            values: (-m..=m)
                .map(|l| if l == 0 { T::one() } else { T::zero() })
                .collect(),
            band_95,
        }
    };
    Ok(ResidualReport {
        alpha,
        s1,
        s2,
        r_alpha_u,
        band,
        band_pass,
        alpha_acf,
    })
}
