use num_complex::Complex;

use super::response::check_grid;
use super::{feedback_unity, series, FrequencyResponse, LtiError, TransferFunction};
use crate::Scalar;

/// Block-diagram expression that keeps transport delays symbolic.
///
/// Frequency evaluation applies every `exp(-jw*T)` exactly, including delays inside feedback
/// loops. [`LoopExpr::rationalize`] produces an ordinary transfer function by substituting
/// Padé approximants.
#[derive(Debug, Clone, PartialEq)]
pub enum LoopExpr<T> {
    Tf(TransferFunction<T>),
    Series(Vec<LoopExpr<T>>),
    /// `G / (1 + G)`
    UnityFeedback(Box<LoopExpr<T>>),
}

impl<T: Scalar> From<TransferFunction<T>> for LoopExpr<T> {
    fn from(tf: TransferFunction<T>) -> Self {
        LoopExpr::Tf(tf)
    }
}

impl<T: Scalar> LoopExpr<T> {
    pub fn series(parts: Vec<LoopExpr<T>>) -> Self {
        LoopExpr::Series(parts)
    }

    pub fn feedback(inner: LoopExpr<T>) -> Self {
        LoopExpr::UnityFeedback(Box::new(inner))
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        match self {
            LoopExpr::Tf(tf) => tf.eval(s),
            LoopExpr::Series(parts) => parts
                .iter()
                .fold(Complex::new(T::one(), T::zero()), |acc, p| acc * p.eval(s)),
            LoopExpr::UnityFeedback(g) => {
                let v = g.eval(s);
                v / (v + T::one())
            }
        }
    }

    /// Frequency response with exact delays. Phase is unwrapped point to point and the first
    /// point is placed in (-180°, 180°].
    pub fn freq_response(&self, omega: &[T]) -> Result<FrequencyResponse<T>, LtiError> {
        check_grid(omega)?;
        let two_pi = T::PI() + T::PI();
        let mut mag = Vec::with_capacity(omega.len());
        let mut phase: Vec<T> = Vec::with_capacity(omega.len());
        for &w in omega {
            let h = self.eval(Complex::new(T::zero(), w));
            if !h.re.is_finite() || !h.im.is_finite() {
                return Err(LtiError::PoleOnAxis { omega: w.as_f64() });
            }
            let raw = h.arg();
            let ph = match phase.last() {
                None => raw,
                Some(&prev) => raw + two_pi * ((prev - raw) / two_pi).round(),
            };
            mag.push(T::lit(20.0) * h.norm().log10());
            phase.push(ph);
        }
        let phase_deg = phase.into_iter().map(|p| p.to_degrees()).collect();
        Ok(FrequencyResponse {
            omega: omega.to_vec(),
            magnitude_db: mag,
            phase_deg,
        })
    }

    /// Rational transfer function with each delay replaced by its `[order/order]` Padé form.
    pub fn rationalize(&self, order: usize) -> Result<TransferFunction<T>, LtiError> {
        match self {
            LoopExpr::Tf(tf) => tf.with_pade(order),
            LoopExpr::Series(parts) => {
                let mut acc = TransferFunction::one();
                for p in parts {
                    acc = series(&acc, &p.rationalize(order)?);
                }
                Ok(acc)
            }
            LoopExpr::UnityFeedback(g) => feedback_unity(&g.rationalize(order)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delayed_loop_uses_exact_exponential() {
        let g = TransferFunction::new(vec![0.5], vec![1.0, 1.0], 1.0).unwrap();
        let cl = LoopExpr::feedback(g.clone().into());
        let s = Complex::new(0.0, 0.8);
        let v = g.eval(s);
        assert!((cl.eval(s) - v / (v + 1.0)).norm() < 1e-15);
        let r = cl.freq_response(&[0.01, 0.8]).unwrap();
        assert!((r.value(1) - v / (v + 1.0)).norm() < 1e-12);
    }

    #[test]
    fn rationalize_matches_direct_closure() {
        let g = TransferFunction::new(vec![0.5], vec![1.0, 1.0], 2.0).unwrap();
        let expr = LoopExpr::feedback(LoopExpr::series(vec![g.clone().into()]));
        let direct = feedback_unity(&g.with_pade(2).unwrap()).unwrap();
        assert_eq!(expr.rationalize(2).unwrap(), direct);
    }
}
