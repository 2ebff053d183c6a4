//! Fixed-step second-order Runge-Kutta (Heun) integration.
//!
//! This is the only integrator in the crate: step responses, identification simulations and
//! the closed-loop simulator all advance their states through [`Rk2`].

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("non-finite derivative at t = {t} (state {state:?})")]
pub struct NonFiniteDerivative {
    pub t: f64,
    pub state: Vec<f64>,
}

/// Reusable Heun stepper holding its stage buffers.
#[derive(Debug, Clone)]
pub struct Rk2<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    probe: Vec<T>,
}

impl<T: Scalar> Rk2<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![T::zero(); dim],
            k2: vec![T::zero(); dim],
            probe: vec![T::zero(); dim],
        }
    }

    /// Advances `x` in place by one step of size `dt`.
    ///
    /// `f(x, t, dx)` writes the derivative into `dx`.
    pub fn step<F>(&mut self, mut f: F, x: &mut [T], t: T, dt: T) -> Result<(), NonFiniteDerivative>
    where
        F: FnMut(&[T], T, &mut [T]),
    {
        let n = x.len();
        if self.k1.len() != n {
            *self = Self::new(n);
        }
        f(x, t, &mut self.k1);
        check(&self.k1, x, t)?;
        for i in 0..n {
            self.probe[i] = x[i] + dt * self.k1[i];
        }
        f(&self.probe, t + dt, &mut self.k2);
        check(&self.k2, &self.probe, t + dt)?;
        let half = dt * T::lit(0.5);
        for i in 0..n {
            x[i] += half * (self.k1[i] + self.k2[i]);
        }
        Ok(())
    }
}

fn check<T: Scalar>(d: &[T], x: &[T], t: T) -> Result<(), NonFiniteDerivative> {
    if d.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NonFiniteDerivative {
            t: t.as_f64(),
            state: x.iter().map(|v| v.as_f64()).collect(),
        })
    }
}

/// One Heun step: `k1 = f(x,t)`, `k2 = f(x + dt k1, t + dt)`, `x' = x + dt/2 (k1 + k2)`.
pub fn rk2_step<T, F>(f: F, x: &[T], t: T, dt: T) -> Result<Vec<T>, NonFiniteDerivative>
where
    T: Scalar,
    F: FnMut(&[T], T, &mut [T]),
{
    let mut next = x.to_vec();
    Rk2::new(x.len()).step(f, &mut next, t, dt)?;
    Ok(next)
}
