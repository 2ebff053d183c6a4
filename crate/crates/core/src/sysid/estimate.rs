use super::metrics::{compute_metrics, nuisance_residual};
use super::noise::{fit_arma11, ljung_box, Arma11};
use super::{DatasetZN, FitReport, ProcessModel, SysidError};
use crate::linalg::{lstsq, Matrix, Qr};
use crate::ode::Rk2;
use crate::Scalar;

/// Error weighting used by [`fit_process_model_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Focus {
    /// One-step prediction errors: the output-error fit is refined with a first-order ARMA
    /// prefilter estimated from its residuals.
    #[default]
    Prediction,
    /// Pure output-error (simulation) fit.
    Simulation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub focus: Focus,
    pub max_iterations: usize,
    /// Log-spaced seed values per pole time constant for the coarse grid.
    pub grid_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            focus: Focus::Prediction,
            max_iterations: 100,
            grid_points: 10,
        }
    }
}

/// Dead-time candidates `0, dt, 2 dt, ..., 5 s`.
pub fn default_delay_candidates<T: Scalar>(dt: T) -> Vec<T> {
    let n = (T::lit(5.0) / dt).round().to_usize().unwrap_or(0);
    (0..=n).map(|k| T::from_usize_lossy(k) * dt).collect()
}

/// Zero-input trajectories of `x1` from unit initial states, and zero-state states driven
/// by `u` for `1/(s^2 + a1 s + a0)` in controllable canonical form.
struct Basis<T> {
    x1: Vec<T>,
    x2: Vec<T>,
    f1: Vec<T>,
    f2: Vec<T>,
}

fn state_basis<T: Scalar>(tp1: T, tp2: T, u: &[T], dt: T) -> Result<Basis<T>, SysidError> {
    let a2 = tp1 * tp2;
    let a1 = (tp1 + tp2) / a2;
    let a0 = T::one() / a2;
    let n = u.len();
    let mut rk = Rk2::new(2);
    let f = |x: &[T], v: T, dx: &mut [T]| {
        dx[0] = x[1];
        dx[1] = v - a0 * x[0] - a1 * x[1];
    };
    let mut run = |x0: [T; 2], input: Option<&[T]>| -> Result<(Vec<T>, Vec<T>), SysidError> {
        let mut x = x0;
        let mut o1 = Vec::with_capacity(n);
        let mut o2 = Vec::with_capacity(n);
        for i in 0..n {
            o1.push(x[0]);
            o2.push(x[1]);
            let v = input.map_or(T::zero(), |u| u[i]);
            let t = T::from_usize_lossy(i) * dt;
            rk.step(|x, _t, dx| f(x, v, dx), &mut x, t, dt)
                .map_err(crate::lti::LtiError::from)?;
        }
        Ok((o1, o2))
    };
    let (x1, x2) = run([T::zero(); 2], Some(u))?;
    let (f1, _) = run([T::one(), T::zero()], None)?;
    let (f2, _) = run([T::zero(), T::one()], None)?;
    Ok(Basis { x1, x2, f1, f2 })
}

fn shifted<T: Scalar>(x: &[T], k: usize) -> Vec<T> {
    let n = x.len();
    let mut out = vec![T::zero(); n];
    if k < n {
        out[k..].copy_from_slice(&x[..n - k]);
    }
    out
}

#[derive(Debug, Clone)]
struct Eval<T> {
    cost: T,
    beta: [T; 2],
    r: Vec<T>,
}

struct Problem<'a, T> {
    u: &'a [T],
    yw: Vec<T>,
    dt: T,
    ones: Vec<T>,
    ramp: Vec<T>,
    whitener: Option<Arma11<T>>,
    bounds: (T, T),
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn new(u: &'a [T], y: &'a [T], dt: T, whitener: Option<Arma11<T>>) -> Self {
        let n = u.len();
        let nn = T::from_usize_lossy(n);
        let w = |x: Vec<T>| match &whitener {
            Some(a) => a.whiten(&x),
            None => x,
        };
        let ones = w(vec![T::one(); n]);
        let ramp = w((1..=n).map(|k| T::from_usize_lossy(k) / nn).collect());
        let yw = w(y.to_vec());
        let lo = (T::lit(0.51) * dt).ln();
        let hi = (T::lit(50.0) * nn * dt).ln();
        Self {
            u,
            yw,
            dt,
            ones,
            ramp,
            whitener,
            bounds: (lo, hi),
        }
    }

    fn weigh(&self, x: Vec<T>) -> Vec<T> {
        match &self.whitener {
            Some(a) => a.whiten(&x),
            None => x,
        }
    }

    fn basis(&self, p: [T; 2]) -> Result<Basis<T>, SysidError> {
        let b = state_basis(p[0].exp(), p[1].exp(), self.u, self.dt)?;
        Ok(Basis {
            f1: self.weigh(b.f1),
            f2: self.weigh(b.f2),
            ..b
        })
    }

    /// Projects trend and initial-condition directions out, then solves for the numerator.
    fn eval_with(&self, b: &Basis<T>, qr: &Qr<T>, k: usize) -> Eval<T> {
        let px1 = qr.project_out(&self.weigh(shifted(&b.x1, k)));
        let px2 = qr.project_out(&self.weigh(shifted(&b.x2, k)));
        let py = qr.project_out(&self.yw);
        let beta = Matrix::from_columns(&[&px1, &px2])
            .and_then(|m| lstsq(&m, &py))
            .map(|v| [v[0], v[1]]);
        match beta {
            Ok(beta) => {
                let r: Vec<T> = (0..py.len())
                    .map(|i| py[i] - beta[0] * px1[i] - beta[1] * px2[i])
                    .collect();
                let cost = r.iter().map(|&v| v * v).sum();
                Eval { cost, beta, r }
            }
            Err(_) => Eval {
                cost: T::infinity(),
                beta: [T::zero(); 2],
                r: py,
            },
        }
    }

    fn nuisance_qr(&self, b: &Basis<T>) -> Result<Qr<T>, SysidError> {
        let m = Matrix::from_columns(&[&self.ones, &self.ramp, &b.f1, &b.f2])?;
        Ok(Qr::new(&m)?)
    }

    fn eval(&self, p: [T; 2], k: usize) -> Result<Eval<T>, SysidError> {
        let b = self.basis(p)?;
        let qr = self.nuisance_qr(&b)?;
        Ok(self.eval_with(&b, &qr, k))
    }

    fn clamp(&self, p: [T; 2]) -> [T; 2] {
        [
            p[0].max(self.bounds.0).min(self.bounds.1),
            p[1].max(self.bounds.0).min(self.bounds.1),
        ]
    }
}

#[derive(Debug, Clone)]
struct LmResult<T> {
    p: [T; 2],
    eval: Eval<T>,
    converged: bool,
    iterations: usize,
}

/// Levenberg-Marquardt on the log pole time constants with a forward-difference Jacobian.
fn levenberg_marquardt<T: Scalar>(
    prob: &Problem<'_, T>,
    start: [T; 2],
    k: usize,
    max_iter: usize,
) -> Result<LmResult<T>, SysidError> {
    let mut p = prob.clamp(start);
    // on the diagonal both Jacobian columns coincide and steps never leave it
    if (p[0] - p[1]).abs() < T::lit(1e-3) {
        p = prob.clamp([p[0] + T::lit(0.05), p[1] - T::lit(0.05)]);
    }
    let mut cur = prob.eval(p, k)?;
    let mut lambda = T::lit(1e-3);
    let h = T::lit(1e-6);
    let rtol = T::lit(1e-12);
    for it in 0..max_iter {
        if !cur.cost.is_finite() {
            return Ok(LmResult {
                p,
                eval: cur,
                converged: false,
                iterations: it,
            });
        }
        let mut jac: Vec<Vec<T>> = Vec::with_capacity(2);
        for i in 0..2 {
            let mut q = p;
            q[i] += h;
            let e = prob.eval(q, k)?;
            jac.push(e.r.iter().zip(&cur.r).map(|(a, b)| (*a - *b) / h).collect());
        }
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(x, y)| *x * *y).sum::<T>();
        let (a11, a12, a22) = (
            dot(&jac[0], &jac[0]),
            dot(&jac[0], &jac[1]),
            dot(&jac[1], &jac[1]),
        );
        let (g1, g2) = (dot(&jac[0], &cur.r), dot(&jac[1], &cur.r));
        let mut accepted = false;
        while lambda < T::lit(1e12) {
            let (d11, d22) = (a11 * (T::one() + lambda), a22 * (T::one() + lambda));
            let det = d11 * d22 - a12 * a12;
            if !(det.abs() > T::zero()) {
                lambda *= T::lit(10.0);
                continue;
            }
            let s1 = -(d22 * g1 - a12 * g2) / det;
            let s2 = -(d11 * g2 - a12 * g1) / det;
            let q = prob.clamp([p[0] + s1, p[1] + s2]);
            let e = prob.eval(q, k)?;
            if e.cost < cur.cost {
                let small = (cur.cost - e.cost) <= rtol * cur.cost
                    || ((q[0] - p[0]).abs() + (q[1] - p[1]).abs()) < T::lit(1e-10);
                p = q;
                cur = e;
                lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                accepted = true;
                if small {
                    return Ok(LmResult {
                        p,
                        eval: cur,
                        converged: true,
                        iterations: it + 1,
                    });
                }
                break;
            }
            lambda *= T::lit(4.0);
        }
        if !accepted {
            // no descent direction left at this scale: a local minimum
            return Ok(LmResult {
                p,
                eval: cur,
                converged: true,
                iterations: it + 1,
            });
        }
    }
    Ok(LmResult {
        p,
        eval: cur,
        converged: false,
        iterations: max_iter,
    })
}

fn to_model<T: Scalar>(p: [T; 2], beta: [T; 2], td: T) -> ProcessModel<T> {
    let (mut tp1, mut tp2) = (p[0].exp(), p[1].exp());
    if tp2 > tp1 {
        std::mem::swap(&mut tp1, &mut tp2);
    }
    let a2 = tp1 * tp2;
    let kp = beta[0] * a2;
    let tz = if beta[0] != T::zero() {
        beta[1] / beta[0]
    } else {
        T::zero()
    };
    ProcessModel {
        kp,
        tz,
        tp1,
        tp2,
        td,
    }
}

fn par_map<I: Sync, O: Send, F>(items: &[I], f: F) -> Vec<O>
where
    F: Fn(&I) -> O + Sync,
{
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<O>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

fn check_detrended<T: Scalar>(x: &[T], name: &'static str) -> Result<(), SysidError> {
    let n = T::from_usize_lossy(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    let rms = (x.iter().map(|&v| v * v).sum::<T>() / n).sqrt();
    if mean.abs() > T::lit(1e-6) * rms + T::min_positive_value() {
        return Err(SysidError::NotDetrended {
            signal: name,
            mean: mean.as_f64(),
        });
    }
    Ok(())
}

/// Fits `Kp, Tz, Tp1, Tp2` for every dead-time candidate and keeps the best.
pub fn fit_process_model<T: Scalar>(
    z: &DatasetZN<T>,
    delay_candidates: &[T],
) -> Result<(ProcessModel<T>, FitReport<T>), SysidError> {
    fit_process_model_with(z, delay_candidates, &FitOptions::default())
}

/// [`fit_process_model`] with explicit options.
///
/// For each dead time (rounded to whole samples) the pole time constants are seeded from a
/// log-spaced grid and refined by Levenberg-Marquardt. Numerator coefficients, a constant,
/// a linear trend and the free response from an unknown initial state enter linearly and are
/// solved in closed form at every evaluation.
pub fn fit_process_model_with<T: Scalar>(
    z: &DatasetZN<T>,
    delay_candidates: &[T],
    opts: &FitOptions,
) -> Result<(ProcessModel<T>, FitReport<T>), SysidError> {
    let n = z.len();
    if n <= 10 {
        return Err(SysidError::TooShort { n, d: 10 });
    }
    check_detrended(z.u.samples(), "u")?;
    check_detrended(z.y.samples(), "y")?;
    let dt = z.dt();
    let mut ks: Vec<usize> = delay_candidates
        .iter()
        .filter(|d| d.is_finite() && **d >= T::zero())
        .map(|d| (*d / dt).round().to_usize().unwrap_or(0))
        .filter(|&k| k < n / 2)
        .collect();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(SysidError::NoDelayCandidates);
    }
    let u = z.u.samples();
    let y = z.y.samples();

    let oe = Problem::new(u, y, dt, None);
    let seeds = grid_seeds(&oe, &ks, opts.grid_points)?;
    let runs: Vec<Result<LmResult<T>, SysidError>> = par_map(&seeds, |(k, p)| {
        levenberg_marquardt(&oe, *p, *k, opts.max_iterations)
    });
    let mut results = Vec::with_capacity(runs.len());
    for r in runs {
        results.push(r?);
    }
    let mut best = pick(&results);

    if opts.focus == Focus::Prediction {
        let (k, r) = (seeds[best].0, &results[best]);
        let model = to_model(r.p, r.eval.beta, T::from_usize_lossy(k) * dt);
        let alpha = nuisance_residual(&model, u, y, dt)?;
        let white = ljung_box(&alpha, 20).as_f64() < 31.410;
        if !white {
            if let Ok(arma) = fit_arma11(&alpha, dt) {
                let pe = Problem::new(u, y, dt, Some(arma));
                let reruns: Vec<Result<LmResult<T>, SysidError>> =
                    par_map(&(0..seeds.len()).collect::<Vec<_>>(), |&i| {
                        levenberg_marquardt(&pe, results[i].p, seeds[i].0, opts.max_iterations)
                    });
                let mut refined = Vec::with_capacity(reruns.len());
                for r in reruns {
                    refined.push(r?);
                }
                results = refined;
                best = pick(&results);
            }
        }
    }

    let r = &results[best];
    let model = to_model(r.p, r.eval.beta, T::from_usize_lossy(seeds[best].0) * dt);
    let report = compute_metrics(z, &model)?;
    if !r.converged {
        return Err(SysidError::NonConvergence {
            iterations: r.iterations,
            best_cost: r.eval.cost.as_f64(),
            best: Box::new((model.to_f64(), report.to_f64())),
        });
    }
    model.validate()?;
    Ok((model, report))
}

fn pick<T: Scalar>(results: &[LmResult<T>]) -> usize {
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.eval.cost < results[best].eval.cost {
            best = i;
        }
    }
    best
}

/// Best grid point per delay candidate.
fn grid_seeds<T: Scalar>(
    prob: &Problem<'_, T>,
    ks: &[usize],
    points: usize,
) -> Result<Vec<(usize, [T; 2])>, SysidError> {
    let points = points.max(2);
    let n = prob.u.len();
    let lo = prob.dt.ln();
    let hi = (T::from_usize_lossy(n) * prob.dt / T::lit(4.0))
        .max(prob.dt * T::lit(4.0))
        .ln();
    let vals: Vec<T> = (0..points)
        .map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(points - 1))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..points {
        for j in 0..=i {
            pairs.push([vals[i], vals[j]]);
        }
    }
    let per_pair: Vec<Result<Vec<T>, SysidError>> = par_map(&pairs, |p| {
        let b = prob.basis(*p)?;
        let qr = prob.nuisance_qr(&b)?;
        Ok(ks
            .iter()
            .map(|&k| prob.eval_with(&b, &qr, k).cost)
            .collect())
    });
    let mut best: Vec<(T, [T; 2])> = vec![(T::infinity(), pairs[0]); ks.len()];
    for (pi, costs) in per_pair.into_iter().enumerate() {
        let costs = costs?;
        for (ki, c) in costs.into_iter().enumerate() {
            if c < best[ki].0 {
                best[ki] = (c, pairs[pi]);
            }
        }
    }
    Ok(ks.iter().zip(best).map(|(&k, (_, p))| (k, p)).collect())
}
