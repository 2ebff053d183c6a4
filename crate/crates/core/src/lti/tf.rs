use num_complex::Complex;

use super::{pade_delay, LtiError};
use crate::poly;
use crate::Scalar;

/// Rational transfer function `num(s)/den(s) * exp(-s*delay)`.
///
/// Coefficients are stored in descending powers of `s`. Values are immutable after
/// construction; every combinator returns a new function.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction<T> {
    num: Vec<T>,
    den: Vec<T>,
    delay: T,
}

impl<T: Scalar> TransferFunction<T> {
    pub fn new(num: Vec<T>, den: Vec<T>, delay: T) -> Result<Self, LtiError> {
        if den.is_empty() || den[0] == T::zero() || den.iter().any(|c| !c.is_finite()) {
            return Err(LtiError::InvalidDenominator);
        }
        if !delay.is_finite() || delay < T::zero() {
            return Err(LtiError::InvalidDelay(delay.as_f64()));
        }
        if num.iter().any(|c| !c.is_finite()) {
            return Err(LtiError::InvalidArgument(
                "numerator has non-finite coefficients".into(),
            ));
        }
        Ok(Self {
            num: poly::trim(&num),
            den,
            delay,
        })
    }

    /// Delay-free rational function.
    pub fn rational(num: Vec<T>, den: Vec<T>) -> Result<Self, LtiError> {
        Self::new(num, den, T::zero())
    }

    pub fn gain(k: T) -> Self {
        Self {
            num: vec![k],
            den: vec![T::one()],
            delay: T::zero(),
        }
    }

    pub fn one() -> Self {
        Self::gain(T::one())
    }

    pub fn zero() -> Self {
        Self::gain(T::zero())
    }

    pub fn pure_delay(delay: T) -> Result<Self, LtiError> {
        Self::new(vec![T::one()], vec![T::one()], delay)
    }

    pub fn num(&self) -> &[T] {
        &self.num
    }

    pub fn den(&self) -> &[T] {
        &self.den
    }

    pub fn delay(&self) -> T {
        self.delay
    }

    pub fn num_degree(&self) -> usize {
        poly::degree(&self.num)
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        poly::is_zero(&self.num)
    }

    pub fn is_proper(&self) -> bool {
        self.is_zero() || self.num_degree() <= self.den_degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.is_zero() || self.num_degree() < self.den_degree()
    }

    pub(crate) fn check_proper(&self) -> Result<(), LtiError> {
        if self.is_proper() {
            Ok(())
        } else {
            Err(LtiError::Improper {
                num_degree: self.num_degree(),
                den_degree: self.den_degree(),
            })
        }
    }

    /// Same system with the denominator scaled to be monic.
    pub fn normalized(&self) -> Self {
        let lead = self.den[0];
        Self {
            num: poly::scale(&self.num, T::one() / lead),
            den: poly::scale(&self.den, T::one() / lead),
            delay: self.delay,
        }
    }

    /// Rational part only (delay dropped).
    pub fn without_delay(&self) -> Self {
        Self {
            delay: T::zero(),
            ..self.clone()
        }
    }

    pub fn with_delay(&self, delay: T) -> Result<Self, LtiError> {
        Self::new(self.num.clone(), self.den.clone(), delay)
    }

    pub fn series(&self, other: &Self) -> Self {
        series(self, other)
    }

    /// Sum of two branches. Both must carry the same delay.
    pub fn parallel(&self, other: &Self) -> Result<Self, LtiError> {
        if self.delay != other.delay {
            return Err(LtiError::DelayMismatch(
                self.delay.as_f64(),
                other.delay.as_f64(),
            ));
        }
        let num = poly::add(
            &poly::mul(&self.num, &other.den),
            &poly::mul(&other.num, &self.den),
        );
        let den = poly::mul(&self.den, &other.den);
        Ok(Self {
            num: poly::trim(&num),
            den,
            delay: self.delay,
        })
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            num: poly::trim(&poly::scale(&self.num, k)),
            ..self.clone()
        }
    }

    pub fn feedback_unity(&self) -> Result<Self, LtiError> {
        feedback_unity(self)
    }

    /// Replaces the transport delay by its `[order/order]` Padé approximant.
    pub fn with_pade(&self, order: usize) -> Result<Self, LtiError> {
        if self.delay == T::zero() {
            return Ok(self.clone());
        }
        let p = pade_delay(self.delay, order)?;
        Ok(series(&self.without_delay(), &p))
    }

    /// `num(s)/den(s)` without the delay factor.
    pub fn eval_rational(&self, s: Complex<T>) -> Complex<T> {
        poly::eval_complex(&self.num, s) / poly::eval_complex(&self.den, s)
    }

    /// Full response including `exp(-s*delay)`.
    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        self.eval_rational(s) * (-s * self.delay).exp()
    }

    /// `num(0)/den(0)`; infinite for systems with a pole at the origin.
    pub fn dc_gain(&self) -> T {
        let n = *self.num.last().unwrap();
        let d = *self.den.last().unwrap();
        n / d
    }

    pub fn zeros(&self) -> Result<Vec<Complex<T>>, LtiError> {
        if self.is_zero() {
            return Ok(Vec::new());
        }
        Ok(poly::roots(&self.num)?)
    }

    pub fn poles(&self) -> Result<Vec<Complex<T>>, LtiError> {
        Ok(poly::roots(&self.den)?)
    }

    pub fn to_zpk(&self) -> Result<ZpkModel<T>, LtiError> {
        tf_to_zpk(self)
    }

    /// Pole report; the delay does not move poles and is ignored.
    pub fn is_stable(&self) -> Result<StabilityReport<T>, LtiError> {
        let mut poles = self.poles()?;
        poles.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        let stable = poles.iter().all(|p| p.re < T::zero());
        Ok(StabilityReport { stable, poles })
    }

    /// Cancels pole-zero pairs closer than `tol` (relative to `max(1, |p|)`).
    pub fn minreal(&self, tol: T) -> Result<Self, LtiError> {
        let zpk = self.to_zpk()?;
        let mut zeros = zpk.zeros.clone();
        let mut poles = Vec::with_capacity(zpk.poles.len());
        for p in &zpk.poles {
            let scale = T::one().max(p.norm());
            let hit = zeros
                .iter()
                .enumerate()
                .filter(|(_, z)| (**z - *p).norm() <= tol * scale)
                .min_by(|a, b| {
                    let da = (*a.1 - *p).norm();
                    let db = (*b.1 - *p).norm();
                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                })
                .map(|(i, _)| i);
            match hit {
                Some(i) => {
                    zeros.remove(i);
                }
                None => poles.push(*p),
            }
        }
        ZpkModel {
            zeros,
            poles,
            gain: zpk.gain,
            delay: zpk.delay,
        }
        .to_tf()
    }
}

/// `a * b`: polynomial products and summed delays. No cancellation is attempted.
pub fn series<T: Scalar>(a: &TransferFunction<T>, b: &TransferFunction<T>) -> TransferFunction<T> {
    TransferFunction {
        num: poly::trim(&poly::mul(&a.num, &b.num)),
        den: poly::mul(&a.den, &b.den),
        delay: a.delay + b.delay,
    }
}

/// `G / (1 + G)` for a delay-free proper open loop.
pub fn feedback_unity<T: Scalar>(g: &TransferFunction<T>) -> Result<TransferFunction<T>, LtiError> {
    if g.delay != T::zero() {
        return Err(LtiError::DelayNotRationalized(g.delay.as_f64()));
    }
    g.check_proper()?;
    if g.is_zero() {
        return Ok(TransferFunction {
            num: vec![T::zero()],
            den: g.den.clone(),
            delay: T::zero(),
        });
    }
    let den = poly::trim(&poly::add(&g.den, &g.num));
    if den[0] == T::zero() {
        return Err(LtiError::InvalidDenominator);
    }
    Ok(TransferFunction {
        num: g.num.clone(),
        den,
        delay: T::zero(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    pub stable: bool,
    /// Sorted by real part, most negative first.
    pub poles: Vec<Complex<T>>,
}

/// Factored form `gain * prod(s - z) / prod(s - p) * exp(-s*delay)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZpkModel<T> {
    pub zeros: Vec<Complex<T>>,
    pub poles: Vec<Complex<T>>,
    pub gain: T,
    pub delay: T,
}

impl<T: Scalar> ZpkModel<T> {
    pub fn is_zero_system(&self) -> bool {
        self.gain == T::zero()
    }

    /// Rebuilds the transfer function with a monic denominator.
    pub fn to_tf(&self) -> Result<TransferFunction<T>, LtiError> {
        let den = poly::from_roots(&self.poles);
        let num = if self.gain == T::zero() {
            vec![T::zero()]
        } else {
            poly::scale(&poly::from_roots(&self.zeros), self.gain)
        };
        TransferFunction::new(num, den, self.delay)
    }
}

pub fn tf_to_zpk<T: Scalar>(tf: &TransferFunction<T>) -> Result<ZpkModel<T>, LtiError> {
    let poles = tf.poles()?;
    if tf.is_zero() {
        return Ok(ZpkModel {
            zeros: Vec::new(),
            poles,
            gain: T::zero(),
            delay: tf.delay,
        });
    }
    Ok(ZpkModel {
        zeros: tf.zeros()?,
        poles,
        gain: tf.num[0] / tf.den[0],
        delay: tf.delay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(num: &[f64], den: &[f64]) -> TransferFunction<f64> {
        TransferFunction::rational(num.to_vec(), den.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_denominator_and_delay() {
        assert_eq!(
            TransferFunction::<f64>::rational(vec![1.0], vec![0.0, 1.0]),
            Err(LtiError::InvalidDenominator)
        );
        assert!(TransferFunction::<f64>::rational(vec![1.0], vec![]).is_err());
        assert!(matches!(
            TransferFunction::new(vec![1.0], vec![1.0], -0.1),
            Err(LtiError::InvalidDelay(_))
        ));
    }

    #[test]
    fn series_multiplies_and_adds_delay() {
        let a = TransferFunction::new(vec![1.0], vec![1.0, 1.0], 2.0).unwrap();
        let b = TransferFunction::new(vec![2.0, 1.0], vec![1.0, 3.0], 0.5).unwrap();
        let c = a.series(&b);
        assert_eq!(c.num(), &[2.0, 1.0]);
        assert_eq!(c.den(), &[1.0, 4.0, 3.0]);
        assert_eq!(c.delay(), 2.5);
        assert_eq!(a.series(&TransferFunction::one()), a);
    }

    #[test]
    fn unity_feedback_cases() {
        let cl = tf(&[1.0], &[1.0, 0.0]).feedback_unity().unwrap();
        assert_eq!(cl.num(), &[1.0]);
        assert_eq!(cl.den(), &[1.0, 1.0]);
        assert!(TransferFunction::<f64>::zero()
            .feedback_unity()
            .unwrap()
            .is_zero());
        let err = tf(&[1.0, 0.0, 0.0], &[1.0, 1.0])
            .feedback_unity()
            .unwrap_err();
        assert_eq!(
            err,
            LtiError::Improper {
                num_degree: 2,
                den_degree: 1
            }
        );
        let delayed = TransferFunction::new(vec![1.0], vec![1.0, 1.0], 1.0).unwrap();
        assert!(matches!(
            delayed.feedback_unity(),
            Err(LtiError::DelayNotRationalized(_))
        ));
    }

    #[test]
    fn zpk_of_simple_systems() {
        let z = tf(&[1.0], &[1.0, 1.0]).to_zpk().unwrap();
        assert!(z.zeros.is_empty());
        assert_eq!(z.gain, 1.0);
        assert!((z.poles[0].re + 1.0).abs() < 1e-12);

        let z = tf(&[2.0, 2.0], &[1.0, 3.0, 2.0]).to_zpk().unwrap();
        assert!((z.zeros[0].re + 1.0).abs() < 1e-12);
        assert_eq!(z.gain, 2.0);
        let mut p: Vec<f64> = z.poles.iter().map(|p| p.re).collect();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((p[0] + 2.0).abs() < 1e-12 && (p[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_system_zpk_is_explicit() {
        let z = tf(&[0.0], &[1.0, 2.0]).to_zpk().unwrap();
        assert!(z.is_zero_system());
        assert!(z.zeros.is_empty());
        assert!(z.to_tf().unwrap().is_zero());
    }

    #[test]
    fn stability_report_sorted() {
        let r = tf(&[1.0], &[1.0, -1.0]).is_stable().unwrap();
        assert!(!r.stable);
        let r = tf(&[1.0], &[1.0, 3.0, 2.0]).is_stable().unwrap();
        assert!(r.stable);
        assert!(r.poles[0].re < r.poles[1].re);
        // Marginal: integrator is not strictly stable.
        assert!(!tf(&[1.0], &[1.0, 0.0]).is_stable().unwrap().stable);
    }

    #[test]
    fn minreal_cancels_close_pairs_only() {
        // (s+1)/((s+1)(s+2))
        let g = tf(&[1.0, 1.0], &[1.0, 3.0, 2.0]);
        let m = g.minreal(1e-8).unwrap();
        assert_eq!(m.num_degree(), 0);
        assert_eq!(m.den_degree(), 1);
        assert!((m.dc_gain() - 0.5).abs() < 1e-12);
        let near = tf(&[1.0, 0.009073], &[1.0, 0.01]);
        assert_eq!(near.minreal(1e-8).unwrap().den_degree(), 1);
    }

    #[test]
    fn parallel_requires_equal_delays() {
        let a = tf(&[1.0], &[1.0, 1.0]);
        let b = tf(&[1.0], &[1.0, 2.0]);
        let p = a.parallel(&b).unwrap();
        assert_eq!(p.num(), &[2.0, 3.0]);
        let d = TransferFunction::new(vec![1.0], vec![1.0], 1.0).unwrap();
        assert!(a.parallel(&d).is_err());
    }
}
