//! Fixed-step stochastic integration: Euler–Maruyama (Itô) and the Heun
//! predictor–corrector (Stratonovich).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::path::{SdePath, Trajectory, TrajectoryMeta};
use super::seed::rng_from_seed;
use super::{KernelError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    EulerMaruyama,
    HeunStratonovich,
}

/// Seeded stream of standard normal variates.
pub struct NoiseSource {
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self { rng: rng_from_seed(seed) }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Stepper for `dX = a(t, X) dt + b(t, X) dW` with `b` stored row-major as a
/// `dim x noise_dim` matrix.
pub struct SdeStepper<T, D, G> {
    drift: D,
    diffusion: G,
    dim: usize,
    noise_dim: usize,
    step: T,
    sqrt_step: T,
    scheme: Scheme,
    noise: NoiseSource,
    dw: Vec<T>,
    a0: Vec<T>,
    b0: Vec<T>,
    a1: Vec<T>,
    b1: Vec<T>,
    pred: Vec<T>,
}

impl<T, D, G> SdeStepper<T, D, G>
where
    T: Real,
    D: Fn(T, &[T], &mut [T]),
    G: Fn(T, &[T], &mut [T]),
{
    pub fn new(drift: D, diffusion: G, dim: usize, noise_dim: usize, step: T, scheme: Scheme, seed: u64) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(KernelError::InvalidInput(format!("step must be positive, got {step}")));
        }
        let z = |n| vec![T::zero(); n];
        Ok(Self {
            drift,
            diffusion,
            dim,
            noise_dim,
            step,
            sqrt_step: step.sqrt(),
            scheme,
            noise: NoiseSource::new(seed),
            dw: z(noise_dim),
            a0: z(dim),
            b0: z(dim * noise_dim),
            a1: z(dim),
            b1: z(dim * noise_dim),
            pred: z(dim),
        })
    }

    pub fn step_size(&self) -> T {
        self.step
    }

    /// Advance `x` from `t` by one step of size `h` (at most the nominal
    /// step; the final step of a span may be shorter).
    pub fn advance(&mut self, t: T, h: T, x: &mut [T]) -> Result<()> {
        let sq = if h == self.step { self.sqrt_step } else { h.sqrt() };
        for w in self.dw.iter_mut() {
            *w = T::lit(self.noise.normal()) * sq;
        }
        let (d, m) = (self.dim, self.noise_dim);
        (self.drift)(t, x, &mut self.a0);
        (self.diffusion)(t, x, &mut self.b0);
        match self.scheme {
            Scheme::EulerMaruyama => {
                for i in 0..d {
                    let mut acc = x[i] + self.a0[i] * h;
                    for k in 0..m {
                        acc = acc + self.b0[i * m + k] * self.dw[k];
                    }
                    x[i] = acc;
                }
            }
            Scheme::HeunStratonovich => {
                for i in 0..d {
                    let mut acc = x[i] + self.a0[i] * h;
                    for k in 0..m {
                        acc = acc + self.b0[i * m + k] * self.dw[k];
                    }
                    self.pred[i] = acc;
                }
                (self.drift)(t + h, &self.pred, &mut self.a1);
                (self.diffusion)(t + h, &self.pred, &mut self.b1);
                let half = T::lit(0.5);
                for i in 0..d {
                    let mut acc = x[i] + half * (self.a0[i] + self.a1[i]) * h;
                    for k in 0..m {
                        acc = acc + half * (self.b0[i * m + k] + self.b1[i * m + k]) * self.dw[k];
                    }
                    x[i] = acc;
                }
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::NonFiniteState { t: (t + h).as_f64() });
        }
        Ok(())
    }

    /// Run from `t0` to `t1`, calling `obs(t, x)` after every step; `obs`
    /// returning `false` stops the run. Returns the final time.
    pub fn run<O>(&mut self, t0: T, t1: T, x: &mut [T], mut obs: O) -> Result<T>
    where
        O: FnMut(T, &[T]) -> bool,
    {
        let n = ((t1 - t0) / self.step).ceil().to_usize().unwrap_or(0);
        let mut t = t0;
        for i in 0..n {
            let tn = if i + 1 == n { t1 } else { t0 + T::from_usize(i + 1).unwrap() * self.step };
            self.advance(t, tn - t, x)?;
            t = tn;
            if !obs(t, x) {
                break;
            }
        }
        Ok(t)
    }
}

/// Sample one path on the uniform grid of `t_span` with the given step and
/// seed. Identical inputs give bit-identical paths.
#[allow(clippy::too_many_arguments)]
pub fn integrate_sde<T, D, G>(
    drift: D,
    diffusion: G,
    noise_dim: usize,
    state0: &[T],
    t_span: (T, T),
    step: T,
    scheme: Scheme,
    seed: u64,
) -> Result<SdePath<T>>
where
    T: Real,
    D: Fn(T, &[T], &mut [T]),
    G: Fn(T, &[T], &mut [T]),
{
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(KernelError::InvalidInput("time span must be ordered".into()));
    }
    if !(step <= (t1 - t0) / T::lit(10.0)) {
        return Err(KernelError::InvalidInput("step must be at most a tenth of the span".into()));
    }
    if state0.iter().any(|v| !v.is_finite()) {
        return Err(KernelError::InvalidInput("initial state must be finite".into()));
    }
    let dim = state0.len();
    let mut stepper = SdeStepper::new(drift, diffusion, dim, noise_dim, step, scheme, seed)?;
    let meta = TrajectoryMeta {
        integrator: match scheme {
            Scheme::EulerMaruyama => "euler-maruyama".into(),
            Scheme::HeunStratonovich => "heun-stratonovich".into(),
        },
        rel_tol: None,
        abs_tol: None,
        step: Some(step.as_f64()),
    };
    let mut path = Trajectory::with_meta(dim, meta);
    path.push(t0, state0)?;
    let mut x = state0.to_vec();
    let mut push_err = None;
    stepper.run(t0, t1, &mut x, |t, x| match path.push(t, x) {
        Ok(()) => true,
        Err(e) => {
            push_err = Some(e);
            false
        }
    })?;
    if let Some(e) = push_err {
        return Err(e);
    }
    Ok(SdePath { path, seed, step })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou(seed: u64, scheme: Scheme) -> SdePath<f64> {
        integrate_sde(
            |_, x: &[f64], d: &mut [f64]| d[0] = -x[0],
            |_, _x: &[f64], g: &mut [f64]| g[0] = 0.5,
            1,
            &[1.0],
            (0.0, 2.0),
            1e-3,
            scheme,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn reproducible_by_seed() {
        let a = ou(7, Scheme::EulerMaruyama);
        let b = ou(7, Scheme::EulerMaruyama);
        let c = ou(8, Scheme::EulerMaruyama);
        assert_eq!(a.path, b.path);
        assert_ne!(a.path, c.path);
        assert_eq!(a.path.len(), 2001);
        assert_eq!(a.path.t_end(), 2.0);
    }

    #[test]
    fn zero_noise_matches_deterministic_decay() {
        let p = integrate_sde(
            |_, x: &[f64], d: &mut [f64]| d[0] = -x[0],
            |_, _x: &[f64], g: &mut [f64]| g[0] = 0.0,
            1,
            &[1.0],
            (0.0, 1.0),
            1e-3,
            Scheme::HeunStratonovich,
            1,
        )
        .unwrap();
        assert!((p.path.last().unwrap().1[0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn ou_mean_and_variance() {
        // stationary variance sigma^2 / 2 = 0.125, mean e^{-2}
        let n = 400;
        let ends: Vec<f64> = (0..n).map(|s| *ou(s, Scheme::EulerMaruyama).path.last().unwrap().1.first().unwrap()).collect();
        let mean = ends.iter().sum::<f64>() / n as f64;
        let var = ends.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let var_exact = 0.125 * (1.0 - (-4.0f64).exp());
        assert!((mean - (-2.0f64).exp()).abs() < 4.0 * (var_exact / n as f64).sqrt());
        assert!((var - var_exact).abs() < 0.3 * var_exact);
    }

    #[test]
    fn stratonovich_correction() {
        // dX = X o dW has E[X_t] = 1 under Stratonovich, e^{t/2} under Ito
        // for the drift-free Ito version the mean stays 1.
        let run = |scheme, seed| {
            integrate_sde(
                |_, _x: &[f64], d: &mut [f64]| d[0] = 0.0,
                |_, x: &[f64], g: &mut [f64]| g[0] = x[0],
                1,
                &[1.0],
                (0.0, 1.0),
                1e-3,
                scheme,
                seed,
            )
            .unwrap()
            .path
            .last()
            .unwrap()
            .1[0]
        };
        let n = 2000;
        let strat: f64 = (0..n).map(|s| run(Scheme::HeunStratonovich, s).ln()).sum::<f64>() / n as f64;
        // Stratonovich solution is exp(W_t): E[ln X] = 0
        assert!(strat.abs() < 0.1);
        let ito: f64 = (0..n).map(|s| run(Scheme::EulerMaruyama, s).ln()).sum::<f64>() / n as f64;
        // Ito solution exp(W - t/2): E[ln X] = -1/2
        assert!((ito + 0.5).abs() < 0.1);
    }

    #[test]
    fn step_precondition() {
        let r = integrate_sde(
            |_, _x: &[f64], d: &mut [f64]| d[0] = 0.0,
            |_, _x: &[f64], g: &mut [f64]| g[0] = 1.0,
            1,
            &[0.0],
            (0.0, 1.0),
            0.5,
            Scheme::EulerMaruyama,
            0,
        );
        assert!(r.is_err());
    }
}
