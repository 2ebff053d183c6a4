use super::{LtiError, TransferFunction};
use crate::Scalar;

/// `[order/order]` Padé approximant of `exp(-s*delay)` with a monic denominator.
///
/// Coefficient of `s^k` in the denominator is
/// `(2n-k)! n! / ((2n)! k! (n-k)!) * delay^k`; the numerator alternates its sign.
pub fn pade_delay<T: Scalar>(delay: T, order: usize) -> Result<TransferFunction<T>, LtiError> {
    if !(delay > T::zero()) || !delay.is_finite() || order == 0 {
        return Err(LtiError::InvalidPade {
            delay: delay.as_f64(),
            order,
        });
    }
    let n = order;
    // ascending coefficients via the ratio c_k / c_{k-1} = (n-k+1) / (k (2n-k+1)) * delay
    let mut asc = vec![T::one(); n + 1];
    for k in 1..=n {
        let ratio = T::from_usize_lossy(n - k + 1)
            / (T::from_usize_lossy(k) * T::from_usize_lossy(2 * n - k + 1));
        asc[k] = asc[k - 1] * ratio * delay;
    }
    let lead = asc[n];
    let den: Vec<T> = asc.iter().rev().map(|&c| c / lead).collect();
    let num: Vec<T> = asc
        .iter()
        .enumerate()
        .rev()
        .map(|(k, &c)| if k % 2 == 1 { -c / lead } else { c / lead })
        .collect();
    TransferFunction::rational(num, den)
}
