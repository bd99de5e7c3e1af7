//! Embedded Dormand–Prince 5(4) pair with PI step-size control.

use super::path::{Trajectory, TrajectoryMeta};
use super::{KernelError, Result};
use crate::scalar::Real;

/// Tolerances and limits for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: Option<T>,
    pub initial_step: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-9), abs_tol: T::lit(1e-12), max_step: None, initial_step: None, max_steps: 5_000_000 }
    }
}

impl<T: Real> OdeOptions<T> {
    pub fn tol(rel_tol: T, abs_tol: T) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn max_step(mut self, h: T) -> Self {
        self.max_step = Some(h);
        self
    }

    fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.rel_tol) || !pos(self.abs_tol) {
            return Err(KernelError::InvalidInput("tolerances must be positive and finite".into()));
        }
        if self.max_step.is_some_and(|h| !pos(h)) || self.initial_step.is_some_and(|h| !pos(h)) {
            return Err(KernelError::InvalidInput("step bounds must be positive".into()));
        }
        Ok(())
    }
}

/// Returned by observers to continue or halt integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Reusable integrator with preallocated stage buffers.
pub struct OdeSolver<T> {
    opts: OdeOptions<T>,
    dim: usize,
    k: [Vec<T>; 7],
    y: Vec<T>,
    ynew: Vec<T>,
    tmp: Vec<T>,
    a: [[T; 6]; 7],
    c: [T; 7],
    e: [T; 7],
    pub stats: StepStats,
    last_step: T,
}

impl<T: Real> OdeSolver<T> {
    pub fn new(dim: usize, opts: OdeOptions<T>) -> Result<Self> {
        opts.validate()?;
        let z = || vec![T::zero(); dim];
        let mut a = [[T::zero(); 6]; 7];
        for (i, row) in A.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a[i][j] = T::lit(*v);
            }
        }
        Ok(Self {
            opts,
            dim,
            k: [z(), z(), z(), z(), z(), z(), z()],
            y: z(),
            ynew: z(),
            tmp: z(),
            a,
            c: C.map(T::lit),
            e: E.map(T::lit),
            stats: StepStats::default(),
            last_step: T::zero(),
        })
    }

    pub fn options(&self) -> &OdeOptions<T> {
        &self.opts
    }

    /// Step size proposed at the end of the last `drive` call.
    pub fn last_step(&self) -> T {
        self.last_step
    }

    fn scale(&self, i: usize, a: T, b: T) -> T {
        let _ = i;
        self.opts.abs_tol + self.opts.rel_tol * a.abs().max(b.abs())
    }

    fn initial_step<F>(&mut self, f: &F, t0: T, span: T) -> T
    where
        F: Fn(T, &[T], &mut [T]),
    {
        let n = T::from_usize(self.dim.max(1)).unwrap();
        let mut d0 = T::zero();
        let mut d1 = T::zero();
        for i in 0..self.dim {
            let sc = self.scale(i, self.y[i], self.y[i]);
            d0 = d0 + (self.y[i] / sc).powi(2);
            d1 = d1 + (self.k[0][i] / sc).powi(2);
        }
        d0 = (d0 / n).sqrt();
        d1 = (d1 / n).sqrt();
        let small = T::lit(1e-5);
        let mut h0 = if d0 < small || d1 < small { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
        h0 = h0.min(span);
        for i in 0..self.dim {
            self.tmp[i] = self.y[i] + h0 * self.k[0][i];
        }
        f(t0 + h0, &self.tmp, &mut self.ynew);
        self.stats.evals += 1;
        let mut d2 = T::zero();
        for i in 0..self.dim {
            let sc = self.scale(i, self.y[i], self.y[i]);
            d2 = d2 + ((self.ynew[i] - self.k[0][i]) / sc).powi(2);
        }
        d2 = (d2 / n).sqrt() / h0;
        let m = d1.max(d2);
        let h1 = if !(m > T::lit(1e-15)) || !m.is_finite() {
            (h0 * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / m).powf(T::lit(0.2))
        };
        let mut h = (T::lit(100.0) * h0).min(h1);
        if !h.is_finite() || h <= T::zero() {
            h = span * T::lit(1e-6);
        }
        h
    }

    /// Integrate from `(t0, x0)` towards `t1`, calling `sink(t, x, dx)` at the
    /// start and after every accepted step. Returns the final time and state.
    pub fn drive<F, S>(&mut self, f: &F, t0: T, x0: &[T], t1: T, mut sink: S) -> Result<(T, Vec<T>)>
    where
        F: Fn(T, &[T], &mut [T]),
        S: FnMut(T, &[T], &[T]) -> Control,
    {
        if x0.len() != self.dim {
            return Err(KernelError::InvalidInput("state length does not match solver dimension".into()));
        }
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(KernelError::InvalidInput(format!("time span must be ordered, got [{t0}, {t1}]")));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::InvalidInput("initial state must be finite".into()));
        }
        let span = t1 - t0;
        let scale0 = x0.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let hmin = span * T::lit(1e-14);
        let hmax = self.opts.max_step.unwrap_or(span).min(span);
        self.y.copy_from_slice(x0);
        f(t0, &self.y, &mut self.k[0]);
        self.stats.evals += 1;
        if self.k[0].iter().any(|v| !v.is_finite()) {
            return Err(KernelError::NonFiniteState { t: t0.as_f64() });
        }
        if sink(t0, &self.y, &self.k[0]) == Control::Stop {
            return Ok((t0, self.y.clone()));
        }
        let mut h = match self.opts.initial_step {
            Some(h) => h,
            None => self.initial_step(f, t0, span),
        }
        .min(hmax);
        let mut t = t0;
        let beta = T::lit(0.04);
        let alpha = T::lit(0.2) - beta * T::lit(0.75);
        let safety = T::lit(0.9);
        let mut err_old = T::lit(1e-4);
        let mut rejected_last = false;
        let mut nonfinite = false;
        let n = T::from_usize(self.dim.max(1)).unwrap();
        let mut steps = 0usize;
        loop {
            if steps >= self.opts.max_steps {
                return Err(KernelError::StepUnderflow { t: t.as_f64(), step: h.as_f64() });
            }
            let remaining = t1 - t;
            let last = h >= remaining * (T::one() - T::lit(1e-12));
            if last {
                h = remaining;
            }
            if h < hmin && !last {
                // runaway growth relative to the initial state reads as blow-up
                let big = self.y.iter().any(|v| !(v.abs() <= T::lit(1e8) * (T::one() + scale0)));
                return Err(if nonfinite || big {
                    KernelError::NonFiniteState { t: t.as_f64() }
                } else {
                    KernelError::StepUnderflow { t: t.as_f64(), step: h.as_f64() }
                });
            }
            for s in 1..7 {
                for i in 0..self.dim {
                    let mut acc = self.y[i];
                    for j in 0..s {
                        let a = self.a[s][j];
                        if a != T::zero() {
                            acc = acc + h * a * self.k[j][i];
                        }
                    }
                    self.tmp[i] = acc;
                }
                let (head, tail) = self.k.split_at_mut(s);
                let _ = head;
                f(t + self.c[s] * h, &self.tmp, &mut tail[0]);
                if s == 6 {
                    self.ynew.copy_from_slice(&self.tmp);
                }
            }
            self.stats.evals += 6;
            let mut err = T::zero();
            for i in 0..self.dim {
                let mut ei = T::zero();
                for j in 0..7 {
                    ei = ei + self.e[j] * self.k[j][i];
                }
                let sc = self.scale(i, self.y[i], self.ynew[i]);
                err = err + (h * ei / sc).powi(2);
            }
            err = (err / n).sqrt();
            if !err.is_finite() || self.ynew.iter().any(|v| !v.is_finite()) {
                nonfinite = true;
                self.stats.rejected += 1;
                h = h * T::lit(0.25);
                rejected_last = true;
                continue;
            }
            if err <= T::one() {
                steps += 1;
                self.stats.accepted += 1;
                nonfinite = false;
                t = if last { t1 } else { t + h };
                self.y.copy_from_slice(&self.ynew);
                self.k.swap(0, 6);
                let e = err.max(T::lit(1e-10));
                let mut fac = safety * e.powf(-alpha) * err_old.powf(beta);
                fac = fac.max(T::lit(0.2)).min(if rejected_last { T::one() } else { T::lit(10.0) });
                err_old = err.max(T::lit(1e-4));
                rejected_last = false;
                let hnext = (h * fac).min(hmax);
                if sink(t, &self.y, &self.k[0]) == Control::Stop || last {
                    self.last_step = hnext;
                    return Ok((t, self.y.clone()));
                }
                h = hnext;
            } else {
                self.stats.rejected += 1;
                rejected_last = true;
                h = h * (safety * err.powf(-alpha)).max(T::lit(0.2));
            }
        }
    }
}

/// Adaptive integration of `x' = field(t, x)` over `t_span`, recording every
/// accepted step together with its derivative for Hermite dense output.
pub fn integrate_ode<T, F>(field: F, state0: &[T], t_span: (T, T), rel_tol: T, abs_tol: T) -> Result<Trajectory<T>>
where
    T: Real,
    F: Fn(T, &[T], &mut [T]),
{
    integrate_ode_with(field, state0, t_span, &OdeOptions::tol(rel_tol, abs_tol), |_, _| Control::Continue)
}

/// As [`integrate_ode`], with full options and an observer that may stop the
/// integration early. The sample at which the observer stops is kept.
pub fn integrate_ode_with<T, F, O>(
    field: F,
    state0: &[T],
    t_span: (T, T),
    opts: &OdeOptions<T>,
    mut observer: O,
) -> Result<Trajectory<T>>
where
    T: Real,
    F: Fn(T, &[T], &mut [T]),
    O: FnMut(T, &[T]) -> Control,
{
    let dim = state0.len();
    let mut solver = OdeSolver::new(dim, *opts)?;
    let meta = TrajectoryMeta {
        integrator: "dopri5".into(),
        rel_tol: Some(opts.rel_tol.as_f64()),
        abs_tol: Some(opts.abs_tol.as_f64()),
        step: None,
    };
    let mut traj = Trajectory::with_meta(dim, meta);
    let mut push_err = None;
    solver.drive(&field, t_span.0, state0, t_span.1, |t, x, dx| {
        if let Err(e) = traj.push_with_deriv(t, x, dx) {
            push_err = Some(e);
            return Control::Stop;
        }
        observer(t, x)
    })?;
    match push_err {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_accuracy() {
        let tr = integrate_ode(|_, x: &[f64], d: &mut [f64]| d[0] = -x[0], &[1.0], (0.0, 5.0), 1e-10, 1e-12).unwrap();
        let (t, x) = tr.last().unwrap();
        assert_eq!(t, 5.0);
        assert!((x[0] - (-5.0f64).exp()).abs() < 1e-10);
        // dense output between steps
        let mid = tr.interpolate(2.345)[0];
        assert!((mid - (-2.345f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn harmonic_oscillator_preserves_energy() {
        let f = |_: f64, x: &[f64], d: &mut [f64]| {
            d[0] = x[1];
            d[1] = -x[0];
        };
        let tr = integrate_ode(f, &[1.0, 0.0], (0.0, 20.0), 1e-10, 1e-12).unwrap();
        let (_, x) = tr.last().unwrap();
        assert!((x[0] - 20.0f64.cos()).abs() < 1e-8);
        assert!((x[1] + 20.0f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn works_in_f32() {
        let tr = integrate_ode(|_, x: &[f32], d: &mut [f32]| d[0] = x[0], &[1.0f32], (0.0, 1.0), 1e-5, 1e-6).unwrap();
        assert!((tr.last().unwrap().1[0] - std::f32::consts::E).abs() < 1e-4);
    }

    #[test]
    fn blow_up_reports_non_finite() {
        // x' = x^2 from x=1 blows up at t=1
        let r = integrate_ode(|_, x: &[f64], d: &mut [f64]| d[0] = x[0] * x[0], &[1.0], (0.0, 2.0), 1e-9, 1e-12);
        match r {
            Err(KernelError::NonFiniteState { t }) => assert!((t - 1.0).abs() < 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn observer_stops() {
        let tr = integrate_ode_with(
            |_, _x: &[f64], d: &mut [f64]| d[0] = 1.0,
            &[0.0],
            (0.0, 10.0),
            &OdeOptions::default().max_step(0.5),
            |_, x| if x[0] > 3.0 { Control::Stop } else { Control::Continue },
        )
        .unwrap();
        let (t, _) = tr.last().unwrap();
        assert!(t > 3.0 && t <= 3.5 + 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let f = |_: f64, _: &[f64], d: &mut [f64]| d[0] = 0.0;
        assert!(integrate_ode(f, &[0.0], (1.0, 0.0), 1e-6, 1e-9).is_err());
        assert!(integrate_ode(f, &[f64::NAN], (0.0, 1.0), 1e-6, 1e-9).is_err());
        assert!(integrate_ode(f, &[0.0], (0.0, 1.0), -1.0, 1e-9).is_err());
    }
}
