use rayon::prelude::*;

use crate::error::{check_positive, Error, Result};
use crate::kernel::{derive_seed, integrate_ode, Scheme, SdeStepper, Trajectory};

use super::{default_step, ProbEstimate};

/// A slowly forced scalar drift `f(x, t)` with a stable branch `x*(t)`.
#[derive(Debug, Clone, Copy)]
pub struct StripProblem {
    pub name: &'static str,
    pub f: fn(f64, f64) -> f64,
    pub dfdx: fn(f64, f64) -> f64,
    pub x_star: fn(f64) -> f64,
    /// Start of the slow-solution integration (the transient from `x*`
    /// decays by `exp(-c/eps)` before time 0).
    pub t_pre: f64,
}

fn sfs_f(x: f64, t: f64) -> f64 {
    -(1.0 + 0.5 * t) * (x - (0.5 * std::f64::consts::PI * t).sin())
}
fn sfs_df(_x: f64, t: f64) -> f64 {
    -(1.0 + 0.5 * t)
}
fn sfs_star(t: f64) -> f64 {
    (0.5 * std::f64::consts::PI * t).sin()
}
fn tcs_f(x: f64, t: f64) -> f64 {
    t * t - x * x
}
fn tcs_df(x: f64, _t: f64) -> f64 {
    -2.0 * x
}
fn tcs_star(t: f64) -> f64 {
    t.abs()
}

impl StripProblem {
    /// `f(x, t) = -(1 + t/2)(x - sin(pi t / 2))`: linearization between
    /// `-3/2` and `-1/2` on `[-1, 1]`.
    pub fn sfs_stable_branch() -> Self {
        Self { name: "sfs-stable-branch", f: sfs_f, dfdx: sfs_df, x_star: sfs_star, t_pre: -1.0 }
    }

    /// `f = t^2 - x^2` on the branch `x* = |t|`, for `t < 0` up to `O(sqrt eps)`.
    pub fn transcritical() -> Self {
        Self { name: "tcs", f: tcs_f, dfdx: tcs_df, x_star: tcs_star, t_pre: -2.0 }
    }
}

/// Confidence strip `|x - xbar(t)| < h / sqrt(2 |a(t)|)` around the slow
/// solution `xbar`, with `a(t) = f_x(xbar(t), t)`.
#[derive(Debug, Clone)]
pub struct StripSpec {
    pub problem: StripProblem,
    pub eps: f64,
    pub h: f64,
    center: Trajectory<f64>,
}

impl StripSpec {
    pub fn new(problem: StripProblem, eps: f64, h: f64, t_end: f64) -> Result<Self> {
        check_positive("eps", eps)?;
        check_positive("h", h)?;
        if !(t_end > problem.t_pre) {
            return Err(Error::InvalidInput("t_end must follow the start of the slow solution".into()));
        }
        let f = problem.f;
        let x0 = (problem.x_star)(problem.t_pre);
        let center = integrate_ode(
            move |t, x: &[f64], d: &mut [f64]| d[0] = f(x[0], t) / eps,
            &[x0],
            (problem.t_pre, t_end),
            1e-10,
            1e-12,
        )?;
        Ok(Self { problem, eps, h, center })
    }

    pub fn center(&self, t: f64) -> f64 {
        self.center.interpolate(t)[0]
    }

    pub fn a(&self, t: f64) -> f64 {
        (self.problem.dfdx)(self.center(t), t)
    }

    pub fn halfwidth(&self, t: f64) -> f64 {
        self.h / (2.0 * self.a(t).abs()).sqrt()
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        (x - self.center(t)).abs() < self.halfwidth(t)
    }

    pub fn center_trajectory(&self) -> &Trajectory<f64> {
        &self.center
    }
}

/// `h = sigma sqrt(2 log(t / (eps p)))`, the strip parameter at which the
/// exit probability over `[0, t]` is of order `p`.
pub fn confidence_h(sigma: f64, eps: f64, t: f64, p: f64) -> f64 {
    sigma * (2.0 * (t / (eps * p)).ln()).sqrt()
}

/// Monte Carlo probability of leaving the strip before `t_end`, starting on
/// the slow solution at time 0. Exits are checked after every step.
pub fn escape_probability_strip(
    problem: &StripProblem,
    eps: f64,
    sigma: f64,
    h: f64,
    t_end: f64,
    n_paths: usize,
    base_seed: u64,
) -> Result<ProbEstimate> {
    if n_paths < 100 {
        return Err(Error::InvalidInput(format!("n_paths = {n_paths} is below 100")));
    }
    check_positive("t_end", t_end)?;
    let spec = StripSpec::new(*problem, eps, h, t_end)?;
    let step = default_step(eps);
    let n_steps = (t_end / step).ceil() as usize;
    // strip geometry on the step grid
    let grid: Vec<(f64, f64)> = (0..=n_steps)
        .map(|i| {
            let t = (i as f64 * step).min(t_end);
            (spec.center(t), spec.halfwidth(t))
        })
        .collect();
    let f = problem.f;
    let noise = sigma / eps.sqrt();
    let x0 = spec.center(0.0);
    let hits: Result<usize> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut st = SdeStepper::new(
                move |t: f64, x: &[f64], d: &mut [f64]| d[0] = f(x[0], t) / eps,
                move |_: f64, _: &[f64], g: &mut [f64]| g[0] = noise,
                1,
                1,
                step,
                Scheme::EulerMaruyama,
                derive_seed(base_seed, i as u64),
            )?;
            let mut x = [x0];
            let mut k = 0usize;
            let mut out = false;
            let r = st.run(0.0, t_end, &mut x, |_, z| {
                k += 1;
                let (c, w) = grid[k.min(n_steps)];
                if (z[0] - c).abs() >= w {
                    out = true;
                    return false;
                }
                true
            });
            match r {
                Ok(_) => Ok(out as usize),
                Err(e) if e.is_non_finite() => Ok(1),
                Err(e) => Err(e.into()),
            }
        })
        .try_reduce(|| 0, |a, b| Ok(a + b));
    Ok(ProbEstimate::from_counts(hits?, n_paths, base_seed))
}
