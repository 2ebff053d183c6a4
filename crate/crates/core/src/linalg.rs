//! Small dense linear algebra: Householder least squares, Gaussian elimination and the
//! Hessenberg QR eigenvalue iteration used for polynomial roots.
//!
//! Sizes here are tiny (a few columns, a handful of polynomial degrees) so everything is
//! plain `Vec` storage without blocking.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is rank deficient (column {column}, |r| = {pivot:e})")]
    RankDeficient { column: usize, pivot: f64 },
    #[error("singular matrix at pivot {0}")]
    Singular(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix whose columns are the given slices (all of equal length).
    pub fn from_columns(columns: &[&[T]]) -> Result<Self, LinalgError> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(LinalgError::Dimension("ragged columns".into()));
        }
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Householder QR factorization of a tall matrix (`rows >= cols`).
#[derive(Debug, Clone)]
pub struct Qr<T> {
    rows: usize,
    cols: usize,
    /// Householder vectors, one per column, each of length `rows - k`.
    reflectors: Vec<Vec<T>>,
    /// Upper triangle of R, row-major `cols x cols`.
    r: Vec<T>,
}

impl<T: Scalar> Qr<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self, LinalgError> {
        let (m, n) = (a.rows, a.cols);
        if m < n {
            return Err(LinalgError::Dimension(format!(
                "QR needs rows >= cols, got {m}x{n}"
            )));
        }
        // column-major working copy
        let mut w: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
        let mut reflectors = Vec::with_capacity(n);
        let mut r = vec![T::zero(); n * n];
        for k in 0..n {
            let norm = w[k][k..].iter().map(|&x| x * x).sum::<T>().sqrt();
            let mut v: Vec<T> = w[k][k..].to_vec();
            if norm > T::zero() {
                let alpha = if v[0] > T::zero() { -norm } else { norm };
                v[0] -= alpha;
                let vnorm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
                if vnorm > T::zero() {
                    for x in v.iter_mut() {
                        *x /= vnorm;
                    }
                    for col in w.iter_mut().skip(k) {
                        reflect(&v, &mut col[k..]);
                    }
                } else {
                    v.iter_mut().for_each(|x| *x = T::zero());
                }
            } else {
                v.iter_mut().for_each(|x| *x = T::zero());
            }
            for j in k..n {
                r[k * n + j] = w[j][k];
            }
            reflectors.push(v);
        }
        Ok(Self {
            rows: m,
            cols: n,
            reflectors,
            r,
        })
    }

    /// Applies `Q^T` in place.
    pub fn apply_qt(&self, b: &mut [T]) {
        for (k, v) in self.reflectors.iter().enumerate() {
            reflect(v, &mut b[k..]);
        }
    }

    /// Removes the component of `b` lying in the column space of the factored matrix.
    pub fn project_out(&self, b: &[T]) -> Vec<T> {
        let mut y = b.to_vec();
        self.apply_qt(&mut y);
        for v in y.iter_mut().take(self.cols) {
            *v = T::zero();
        }
        // apply Q back
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            reflect(v, &mut y[k..]);
        }
        y
    }

    pub fn diag_r(&self) -> Vec<T> {
        (0..self.cols).map(|k| self.r[k * self.cols + k]).collect()
    }

    /// Least-squares solution of `A x = b`. Fails when a diagonal entry of R is negligible.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::Dimension(format!(
                "rhs has {} rows, matrix has {}",
                b.len(),
                self.rows
            )));
        }
        let n = self.cols;
        let diag = self.diag_r();
        let max = diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
        let tol = max * T::eps() * T::from_usize_lossy(self.rows.max(n)) * T::lit(16.0);
        for (k, d) in diag.iter().enumerate() {
            if d.abs() <= tol || max == T::zero() {
                return Err(LinalgError::RankDeficient {
                    column: k,
                    pivot: d.as_f64(),
                });
            }
        }
        let mut y = b.to_vec();
        self.apply_qt(&mut y);
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.r[i * n + j] * x[j];
            }
            x[i] = s / self.r[i * n + i];
        }
        Ok(x)
    }
}

#[inline]
fn reflect<T: Scalar>(v: &[T], x: &mut [T]) {
    let dot: T = v.iter().zip(x.iter()).map(|(&a, &b)| a * b).sum();
    if dot != T::zero() {
        let two = dot + dot;
        for (xi, &vi) in x.iter_mut().zip(v) {
            *xi -= two * vi;
        }
    }
}

/// Least squares `min ||A x - b||` via Householder QR.
pub fn lstsq<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    Qr::new(a)?.solve(b)
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(LinalgError::Dimension("square system expected".into()));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.data.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().partial_cmp(&m[(j, k)].abs()).unwrap())
            .unwrap();
        if m[(p, k)].abs() <= scale * T::eps() * T::from_usize_lossy(n) {
            return Err(LinalgError::Singular(k));
        }
        if p != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            if f != T::zero() {
                for j in k..n {
                    let v = m[(k, j)];
                    m[(i, j)] -= f * v;
                }
                let v = x[k];
                x[i] -= f * v;
            }
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

/// Diagonal similarity balancing (Parlett-Reinsch) to improve eigenvalue accuracy.
fn balance<T: Scalar>(a: &mut Matrix<T>) {
    let n = a.rows;
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let g = T::one() / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

#[inline]
fn sign<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR iteration.
/// The matrix is balanced first; entries below the first subdiagonal are ignored.
pub fn hessenberg_eigenvalues<T: Scalar>(h: &Matrix<T>) -> Result<Vec<Complex<T>>, LinalgError> {
    let n = h.rows;
    if h.cols != n {
        return Err(LinalgError::Dimension("square matrix expected".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = h.clone();
    balance(&mut a);
    let mut wr = vec![T::zero(); n];
    let mut wi = vec![T::zero(); n];

    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let half = T::lit(0.5);
    let mut nn = n as isize - 1;
    let mut t = T::zero();
    let at = |a: &Matrix<T>, i: isize, j: isize| a[(i as usize, j as usize)];
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 1 {
                let mut s = at(&a, l - 1, l - 1).abs() + at(&a, l, l).abs();
                if s == T::zero() {
                    s = anorm;
                }
                if at(&a, l, l - 1).abs() + s == s {
                    a[(l as usize, l as usize - 1)] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = at(&a, nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = T::zero();
                nn -= 1;
            } else {
                let mut y = at(&a, nn - 1, nn - 1);
                let mut w = at(&a, nn, nn - 1) * at(&a, nn - 1, nn);
                if l == nn - 1 {
                    let p = half * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    let (i0, i1) = (nn as usize - 1, nn as usize);
                    if q >= T::zero() {
                        z = p + sign(z, p);
                        wr[i0] = x + z;
                        wr[i1] = x + z;
                        if z != T::zero() {
                            wr[i1] = x - w / z;
                        }
                        wi[i0] = T::zero();
                        wi[i1] = T::zero();
                    } else {
                        wr[i0] = x + p;
                        wr[i1] = x + p;
                        wi[i0] = -z;
                        wi[i1] = z;
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return Err(LinalgError::NoConvergence);
                    }
                    if its == 10 || its == 20 || its == 40 {
                        t += x;
                        for i in 0..=nn {
                            a[(i as usize, i as usize)] -= x;
                        }
                        let s = at(&a, nn, nn - 1).abs() + at(&a, nn - 1, nn - 2).abs();
                        x = T::lit(0.75) * s;
                        y = x;
                        w = T::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = at(&a, m, m);
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / at(&a, m + 1, m) + at(&a, m, m + 1);
                        q = at(&a, m + 1, m + 1) - z - r - s;
                        r = at(&a, m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = at(&a, m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs()
                            * (at(&a, m - 1, m - 1).abs() + z.abs() + at(&a, m + 1, m + 1).abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nn {
                        a[(i as usize, i as usize - 2)] = T::zero();
                        if i != m + 2 {
                            a[(i as usize, i as usize - 3)] = T::zero();
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = at(&a, k, k - 1);
                            q = at(&a, k + 1, k - 1);
                            r = T::zero();
                            if k != nn - 1 {
                                r = at(&a, k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != T::zero() {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != T::zero() {
                            if k == m {
                                if l != m {
                                    let v = at(&a, k, k - 1);
                                    a[(k as usize, k as usize - 1)] = -v;
                                }
                            } else {
                                a[(k as usize, k as usize - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let (ku, ju) = (k as usize, j as usize);
                                p = a[(ku, ju)] + q * a[(ku + 1, ju)];
                                if k != nn - 1 {
                                    p += r * a[(ku + 2, ju)];
                                    a[(ku + 2, ju)] -= p * z;
                                }
                                a[(ku + 1, ju)] -= p * y;
                                a[(ku, ju)] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let (ku, iu) = (k as usize, i as usize);
                                p = x * a[(iu, ku)] + y * a[(iu, ku + 1)];
                                if k != nn - 1 {
                                    p += z * a[(iu, ku + 2)];
                                    a[(iu, ku + 2)] -= p * r;
                                }
                                a[(iu, ku + 1)] -= p * q;
                                a[(iu, ku)] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 0 || l >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex::new(re, im))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_recovers_exact_line() {
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ones = vec![1.0; 10];
        let y: Vec<f64> = t.iter().map(|t| 3.0 - 0.5 * t).collect();
        let a = Matrix::from_columns(&[&ones, &t]).unwrap();
        let x = lstsq(&a, &y).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn lstsq_flags_rank_deficiency() {
        let c = vec![1.0; 5];
        let a = Matrix::from_columns(&[&c, &c]).unwrap();
        assert!(matches!(
            lstsq(&a, &c),
            Err(LinalgError::RankDeficient { .. })
        ));
    }

    #[test]
    fn projection_is_orthogonal_to_columns() {
        let t: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let ones = vec![1.0; 50];
        let qr = Qr::new(&Matrix::from_columns(&[&ones, &t]).unwrap()).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sqrt()).collect();
        let r = qr.project_out(&b);
        let d1: f64 = r.iter().sum();
        let d2: f64 = r.iter().zip(&t).map(|(a, b)| a * b).sum();
        assert!(d1.abs() < 1e-10 && d2.abs() < 1e-10);
    }

    #[test]
    fn gaussian_solve() {
        let a = Matrix::<f64>::from_rows(2, 2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        let s = Matrix::from_rows(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(solve(&s, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn eigenvalues_of_companion() {
        // s^3 - 6 s^2 + 11 s - 6 = (s-1)(s-2)(s-3)
        let h = Matrix::<f64>::from_rows(3, 3, vec![6.0, -11.0, 6.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
            .unwrap();
        let mut ev: Vec<f64> = hessenberg_eigenvalues(&h)
            .unwrap()
            .iter()
            .map(|c| c.re)
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (e, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e - want).abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn eigenvalues_complex_pair() {
        // s^2 + 2 s + 5 -> -1 ± 2j
        let h = Matrix::<f64>::from_rows(2, 2, vec![-2.0, -5.0, 1.0, 0.0]).unwrap();
        let ev = hessenberg_eigenvalues(&h).unwrap();
        for e in ev {
            assert!((e.re + 1.0).abs() < 1e-12 && (e.im.abs() - 2.0).abs() < 1e-12);
        }
    }
}
