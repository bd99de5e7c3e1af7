use rayon::prelude::*;

use crate::error::{check_positive, Error, Result};
use crate::kernel::{derive_seed, integrate_ode, Scheme, SdeStepper};

use super::{default_step, ProbEstimate};

/// Deterministic slow solution of `eps x' = t^2 - x^2 + delta` at `t0`,
/// integrated from `t0 - 1` on the stable branch.
pub fn transcritical_slow_solution(eps: f64, delta: f64, t0: f64) -> Result<f64> {
    check_positive("eps", eps)?;
    let ts = t0 - 1.0;
    let x0 = (ts * ts + delta).sqrt();
    let tr = integrate_ode(
        move |t, x: &[f64], d: &mut [f64]| d[0] = (t * t - x[0] * x[0] + delta) / eps,
        &[x0],
        (ts, t0),
        1e-10,
        1e-12,
    )?;
    Ok(tr.last().map(|(_, x)| x[0]).unwrap_or(x0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionOptions {
    pub t0: f64,
    pub t_end: f64,
    /// Level whose crossing counts as a transition.
    pub level: f64,
    /// Defaults to `min(1e-3, eps/50)`.
    pub step: Option<f64>,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        Self { t0: -1.0, t_end: 1.0, level: -1.0, step: None }
    }
}

/// Probability that a path started on the slow solution at `t0` reaches
/// `x = -1` by time 1. Without `delta` this is the transcritical SDE, with
/// it the avoided crossing.
pub fn transition_probability_transcritical(
    eps: f64,
    sigma: f64,
    delta: Option<f64>,
    t0: f64,
    n_paths: usize,
    base_seed: u64,
) -> Result<ProbEstimate> {
    let opts = TransitionOptions { t0, ..Default::default() };
    transition_probability_with(eps, sigma, delta, n_paths, base_seed, &opts)
}

pub fn transition_probability_with(
    eps: f64,
    sigma: f64,
    delta: Option<f64>,
    n_paths: usize,
    base_seed: u64,
    opts: &TransitionOptions,
) -> Result<ProbEstimate> {
    check_positive("eps", eps)?;
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be non-negative, got {sigma}")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be positive".into()));
    }
    let d = delta.unwrap_or(0.0);
    if d < 0.0 {
        return Err(Error::InvalidInput(format!("delta must be non-negative, got {d}")));
    }
    if !(opts.t0 < 0.0 && opts.t_end > opts.t0) {
        return Err(Error::InvalidInput("need t0 < 0 < t_end".into()));
    }
    let x0 = transcritical_slow_solution(eps, d, opts.t0)?;
    let step = opts.step.unwrap_or_else(|| default_step(eps));
    let noise = sigma / eps.sqrt();
    let level = opts.level;
    let hits: Result<usize> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut st = SdeStepper::new(
                move |t: f64, x: &[f64], dx: &mut [f64]| dx[0] = (t * t - x[0] * x[0] + d) / eps,
                move |_: f64, _: &[f64], g: &mut [f64]| g[0] = noise,
                1,
                1,
                step,
                Scheme::EulerMaruyama,
                derive_seed(base_seed, i as u64),
            )?;
            let mut x = [x0];
            let mut hit = false;
            match st.run(opts.t0, opts.t_end, &mut x, |_, z| {
                hit = z[0] <= level;
                !hit
            }) {
                Ok(_) => Ok(hit as usize),
                // a path escaping to -inf has crossed the level
                Err(e) if e.is_non_finite() => Ok(1),
                Err(e) => Err(e.into()),
            }
        })
        .try_reduce(|| 0, |a, b| Ok(a + b));
    Ok(ProbEstimate::from_counts(hits?, n_paths, base_seed))
}

/// Noise level at which the transition probability crosses 1/2, by
/// bisection in `log sigma` with common random numbers across levels.
pub fn sigma_half_level(
    eps: f64,
    delta: Option<f64>,
    n_paths: usize,
    base_seed: u64,
    bracket: (f64, f64),
    iters: usize,
) -> Result<f64> {
    let p = |s: f64| transition_probability_transcritical(eps, s, delta, -1.0, n_paths, base_seed).map(|e| e.p_hat);
    let (mut lo, mut hi) = (bracket.0.ln(), bracket.1.ln());
    if !(p(lo.exp())? < 0.5 && p(hi.exp())? > 0.5) {
        return Err(Error::BracketingFailure { lo: bracket.0, hi: bracket.1 });
    }
    for _ in 0..iters {
        let m = 0.5 * (lo + hi);
        if p(m.exp())? < 0.5 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::integrate_sde;

    #[test]
    fn zero_noise_matches_ode() {
        let eps = 0.05;
        let x0 = transcritical_slow_solution(eps, 0.0, -1.0).unwrap();
        let step = default_step(eps);
        let sde = integrate_sde(
            |t: f64, x: &[f64], d: &mut [f64]| d[0] = (t * t - x[0] * x[0]) / eps,
            |_: f64, _: &[f64], g: &mut [f64]| g[0] = 0.0,
            1,
            &[x0],
            (-1.0, 1.0),
            step,
            Scheme::EulerMaruyama,
            3,
        )
        .unwrap();
        let ode = integrate_ode(
            |t, x: &[f64], d: &mut [f64]| d[0] = (t * t - x[0] * x[0]) / eps,
            &[x0],
            (-1.0, 1.0),
            1e-10,
            1e-12,
        )
        .unwrap();
        let a = sde.path.last().unwrap().1[0];
        let b = ode.last().unwrap().1[0];
        assert!((a - b).abs() < 50.0 * step, "{a} vs {b}");
        assert!(transition_probability_transcritical(eps, 0.0, None, -1.0, 10, 1).unwrap().hits == 0);
    }

    #[test]
    fn regimes_at_hundredth() {
        let eps: f64 = 0.01;
        let low = transition_probability_transcritical(eps, eps, None, -1.0, 200, 1).unwrap();
        assert!(low.p_hat < 0.05, "{low:?}");
        let high = transition_probability_transcritical(eps, 10.0 * eps.powf(0.75), None, -1.0, 200, 2).unwrap();
        assert!(high.p_hat > 0.9, "{high:?}");
    }
}
