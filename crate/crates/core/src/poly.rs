//! Real polynomials stored as coefficient vectors in descending powers of `s`.

use num_complex::Complex;

use crate::linalg::{hessenberg_eigenvalues, LinalgError, Matrix};
use crate::Scalar;

/// Drops leading zero coefficients, keeping at least one entry.
pub fn trim<T: Scalar>(p: &[T]) -> Vec<T> {
    let first = p.iter().position(|c| *c != T::zero());
    match first {
        Some(i) => p[i..].to_vec(),
        None => vec![T::zero()],
    }
}

pub fn is_zero<T: Scalar>(p: &[T]) -> bool {
    p.iter().all(|c| *c == T::zero())
}

/// Degree after trimming; the zero polynomial has degree 0.
pub fn degree<T: Scalar>(p: &[T]) -> usize {
    trim(p).len() - 1
}

pub fn mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return vec![T::zero()];
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let n = a.len().max(b.len());
    let mut out = vec![T::zero(); n];
    for (i, &x) in a.iter().enumerate() {
        out[n - a.len() + i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[n - b.len() + i] += x;
    }
    out
}

pub fn scale<T: Scalar>(a: &[T], k: T) -> Vec<T> {
    a.iter().map(|&x| x * k).collect()
}

pub fn eval<T: Scalar>(p: &[T], x: T) -> T {
    p.iter().fold(T::zero(), |acc, &c| acc * x + c)
}

pub fn eval_complex<T: Scalar>(p: &[T], z: Complex<T>) -> Complex<T> {
    p.iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &c| {
            acc * z + Complex::new(c, T::zero())
        })
}

pub fn derivative<T: Scalar>(p: &[T]) -> Vec<T> {
    let n = p.len();
    if n <= 1 {
        return vec![T::zero()];
    }
    p[..n - 1]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * T::from_usize_lossy(n - 1 - i))
        .collect()
}

/// Monic real polynomial with the given roots. Complex roots are taken from their
/// positive-imaginary member; the conjugate is implied.
pub fn from_roots<T: Scalar>(roots: &[Complex<T>]) -> Vec<T> {
    let mut p = vec![T::one()];
    for r in roots {
        if r.im == T::zero() {
            p = mul(&p, &[T::one(), -r.re]);
        } else if r.im > T::zero() {
            p = mul(&p, &[T::one(), -(r.re + r.re), r.norm_sqr()]);
        }
    }
    p
}

/// Roots of a real polynomial.
///
/// Exact zero roots are split off first; the remainder goes through the eigenvalues of its
/// balanced companion matrix and a few Newton steps against the original coefficients.
/// Complex roots come back in conjugate pairs (positive imaginary part first).
pub fn roots<T: Scalar>(p: &[T]) -> Result<Vec<Complex<T>>, LinalgError> {
    let p = trim(p);
    if p.len() <= 1 {
        return Ok(Vec::new());
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = Vec::new();
    let mut q = p.clone();
    while q.len() > 1 && *q.last().unwrap() == T::zero() {
        q.pop();
        out.push(zero);
    }
    let n = q.len() - 1;
    if n == 0 {
        return Ok(out);
    }
    if n == 1 {
        out.push(Complex::new(-q[1] / q[0], T::zero()));
        return Ok(out);
    }
    let mut c = Matrix::zeros(n, n);
    for j in 0..n {
        c[(0, j)] = -q[j + 1] / q[0];
    }
    for i in 1..n {
        c[(i, i - 1)] = T::one();
    }
    let raw = hessenberg_eigenvalues(&c)?;
    let dq = derivative(&q);
    let polish = |mut z: Complex<T>, real: bool| {
        let mut fz = eval_complex(&q, z).norm();
        for _ in 0..8 {
            let d = eval_complex(&dq, z);
            if d.norm() == T::zero() {
                break;
            }
            let mut step = eval_complex(&q, z) / d;
            if real {
                step.im = T::zero();
            }
            let cand = z - step;
            let fc = eval_complex(&q, cand).norm();
            if fc < fz {
                z = cand;
                fz = fc;
            } else {
                break;
            }
        }
        z
    };
    let mut i = 0;
    while i < raw.len() {
        let z = raw[i];
        if z.im == T::zero() {
            out.push(polish(z, true));
            i += 1;
        } else {
            let upper = if z.im > T::zero() { z } else { z.conj() };
            let zp = polish(upper, false);
            let zp = if zp.im <= T::zero() { upper } else { zp };
            out.push(zp);
            out.push(zp.conj());
            i += 2;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiply_and_add() {
        assert_eq!(mul(&[1.0, 1.0], &[1.0, 2.0]), vec![1.0, 3.0, 2.0]);
        assert_eq!(add(&[1.0, 0.0, 0.0], &[2.0, 1.0]), vec![1.0, 2.0, 1.0]);
        assert_eq!(trim(&[0.0, 0.0, 3.0, 1.0]), vec![3.0, 1.0]);
        assert_eq!(trim(&[0.0, 0.0]), vec![0.0]);
    }

    #[test]
    fn derivative_and_eval() {
        let p = [2.0, -3.0, 1.0];
        assert_eq!(derivative(&p), vec![4.0, -3.0]);
        assert_eq!(eval(&p, 2.0), 3.0);
    }

    #[test]
    fn roots_of_quadratic() {
        let r = roots(&[1.0, 3.0, 2.0]).unwrap();
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn roots_with_zero_and_complex_pair() {
        // s (s^2 + 3 s + 3)
        let r = roots(&[1.0f64, 3.0, 3.0, 0.0]).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().any(|z| z.norm() == 0.0));
        let c: Vec<_> = r.iter().filter(|z| z.im != 0.0).collect();
        assert_eq!(c.len(), 2);
        assert!((c[0].re + 1.5).abs() < 1e-12);
        assert!((c[0].im.abs() - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(c[0].conj(), *c[1]);
    }

    #[test]
    fn round_trip_through_roots() {
        let p = [1.0f64, 0.3, -2.0, 0.7, 4.0, 1.5];
        let r = roots(&p).unwrap();
        let back = from_roots(&r);
        for (a, b) in p.iter().zip(&back) {
            assert!(
                (a - b).abs() < 1e-10 * a.abs().max(1.0),
                "{p:?} vs {back:?}"
            );
        }
    }
}
