use super::{LtiError, TransferFunction};
use crate::Scalar;

/// Controllable canonical realization of the rational part of a proper transfer function.
///
/// With monic denominator `s^n + a_{n-1} s^{n-1} + ... + a_0`, the states obey
/// `x_i' = x_{i+1}` and `x_{n-1}' = u - sum a_i x_i`; the output is `c . x + d u`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalRealization<T> {
    /// `a_0 .. a_{n-1}`
    a: Vec<T>,
    /// `c_0 .. c_{n-1}`
    c: Vec<T>,
    d: T,
}

impl<T: Scalar> CanonicalRealization<T> {
    pub fn new(tf: &TransferFunction<T>) -> Result<Self, LtiError> {
        tf.check_proper()?;
        let tf = tf.normalized();
        let n = tf.den_degree();
        let mut num = vec![T::zero(); n + 1];
        let src = tf.num();
        if !tf.is_zero() {
            num[n + 1 - src.len()..].copy_from_slice(src);
        }
        let d = num[0];
        let den = tf.den();
        // ascending order, after removing the direct feedthrough
        let a: Vec<T> = (0..n).map(|i| den[n - i]).collect();
        let c: Vec<T> = (0..n).map(|i| num[n - i] - d * den[n - i]).collect();
        Ok(Self { a, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn feedthrough(&self) -> T {
        self.d
    }

    pub fn derivative(&self, x: &[T], u: T, dx: &mut [T]) {
        let n = self.a.len();
        if n == 0 {
            return;
        }
        dx[..n - 1].copy_from_slice(&x[1..n]);
        let mut acc = u;
        for i in 0..n {
            acc -= self.a[i] * x[i];
        }
        dx[n - 1] = acc;
    }

    pub fn output(&self, x: &[T], u: T) -> T {
        self.c
            .iter()
            .zip(x)
            .fold(self.d * u, |acc, (&c, &x)| acc + c * x)
    }

    /// Equilibrium state for a constant input, if the system has no pole at the origin.
    pub fn equilibrium(&self, u: T) -> Option<Vec<T>> {
        let n = self.a.len();
        let mut x = vec![T::zero(); n];
        if n == 0 {
            return Some(x);
        }
        if self.a[0] == T::zero() {
            return None;
        }
        x[0] = u / self.a[0];
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_lag() {
        let tf = TransferFunction::rational(vec![2.0], vec![2.0, 2.0]).unwrap();
        let r = CanonicalRealization::new(&tf).unwrap();
        assert_eq!(r.order(), 1);
        let mut dx = [0.0];
        r.derivative(&[0.5], 1.0, &mut dx);
        assert_eq!(dx[0], 0.5);
        assert_eq!(r.output(&[0.5], 1.0), 0.5);
        assert_eq!(r.equilibrium(1.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn biproper_feedthrough() {
        // (s - 1)/(s + 1) = 1 - 2/(s + 1)
        let tf = TransferFunction::rational(vec![1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let r = CanonicalRealization::new(&tf).unwrap();
        assert_eq!(r.feedthrough(), 1.0);
        assert_eq!(r.output(&[1.0], 0.0), -2.0);
    }

    #[test]
    fn improper_is_rejected() {
        let tf = TransferFunction::rational(vec![1.0, 0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            CanonicalRealization::new(&tf),
            Err(LtiError::Improper { .. })
        ));
    }
}
