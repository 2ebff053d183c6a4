use super::{DatasetZN, SysidError};
use crate::Scalar;

/// `y(t) + a_1 y(t-1) + ... + a_n y(t-n) = b_1 u(t-1) + ... + b_m u(t-m) + e(t)`
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceEquationModel<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> DifferenceEquationModel<T> {
    pub fn new(a: Vec<T>, b: Vec<T>) -> Result<Self, SysidError> {
        if a.is_empty() || b.is_empty() {
            return Err(SysidError::InvalidModel(
                "difference equation needs n, m >= 1".into(),
            ));
        }
        Ok(Self { a, b })
    }

    /// First index with a full regressor.
    pub fn min_index(&self) -> usize {
        self.a.len().max(self.b.len())
    }

    /// Parameter vector `[a_1..a_n, b_1..b_m]`.
    pub fn theta(&self) -> Vec<T> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    /// Regressor `[-y(t-1)..-y(t-n), u(t-1)..u(t-m)]`, so that the prediction is
    /// `phi(t) . theta`.
    pub fn regressor(&self, y: &[T], u: &[T], t: usize) -> Vec<T> {
        let mut phi: Vec<T> = (1..=self.a.len()).map(|i| -y[t - i]).collect();
        phi.extend((1..=self.b.len()).map(|j| u[t - j]));
        phi
    }
}

/// One-step-ahead prediction `ŷ(t|θ) = -Σ a_i y(t-i) + Σ b_j u(t-j)`.
pub fn predict_one_step<T: Scalar>(
    m: &DifferenceEquationModel<T>,
    z: &DatasetZN<T>,
    t: usize,
) -> Result<T, SysidError> {
    let min = m.min_index();
    if t < min || t >= z.len() {
        return Err(SysidError::OutOfRange {
            index: t,
            min,
            len: z.len(),
        });
    }
    let phi = m.regressor(z.y.samples(), z.u.samples(), t);
    Ok(phi
        .iter()
        .zip(m.theta())
        .fold(T::zero(), |acc, (p, th)| acc + *p * th))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SignalRecord;
    use crate::sysid::Role;

    fn data(u: Vec<f64>, y: Vec<f64>) -> DatasetZN<f64> {
        DatasetZN::new(
            SignalRecord::new(u, 1.0).unwrap(),
            SignalRecord::new(y, 1.0).unwrap(),
            Role::Estimation,
        )
        .unwrap()
    }

    #[test]
    fn unit_delay_and_arithmetic() {
        let z = data(vec![3.0, 7.0, 1.0], vec![0.0, 2.0, 0.0]);
        let m = DifferenceEquationModel::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(predict_one_step(&m, &z, 2).unwrap(), 7.0);
        let z = data(vec![0.0, 0.0], vec![2.0, 0.0]);
        let m = DifferenceEquationModel::new(vec![-0.5], vec![1.0]).unwrap();
        assert_eq!(predict_one_step(&m, &z, 1).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range() {
        let z = data(vec![0.0; 4], vec![0.0; 4]);
        let m = DifferenceEquationModel::new(vec![0.1, 0.2], vec![1.0]).unwrap();
        assert!(predict_one_step(&m, &z, 1).is_err());
        assert!(predict_one_step(&m, &z, 4).is_err());
        assert!(predict_one_step(&m, &z, 2).is_ok());
    }
}
