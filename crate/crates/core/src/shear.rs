//! Shear-induced chaos: Lyapunov exponents of the noisy cylinder model by
//! quadrature of the stationary amplitude density, with Monte Carlo checks
//! for the cylinder and for the noisy Hopf normal form.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, Error, Result};
use crate::kernel::quad::integrate;
use crate::kernel::{derive_seed, Scheme, SdeStepper};
use crate::stats::mean_se;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LyapMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapPair {
    pub lambda1: f64,
    pub lambda2: f64,
    pub method: LyapMethod,
    /// Standard error of `lambda1` (Monte Carlo only).
    pub se: Option<f64>,
}

/// A phase function `f` on the circle `[0, 1)` with its derivative.
#[derive(Debug, Clone, Copy)]
pub struct PhaseField {
    pub f: fn(f64) -> f64,
    pub df: fn(f64) -> f64,
}

fn sin_field(t: f64) -> f64 {
    (2.0 * PI * t).sin() / (2.0 * PI)
}
fn sin_field_d(t: f64) -> f64 {
    (2.0 * PI * t).cos()
}
fn cos_field(t: f64) -> f64 {
    (2.0 * PI * t).cos() / (2.0 * PI)
}
fn cos_field_d(t: f64) -> f64 {
    -(2.0 * PI * t).sin()
}

#[derive(Debug, Clone)]
pub struct ShearParams {
    pub alpha: f64,
    pub b: f64,
    pub sigma: f64,
    fields: Vec<PhaseField>,
}

impl ShearParams {
    /// Parameters with the default pair `sin(2 pi t)/(2 pi)`, `cos(2 pi t)/(2 pi)`.
    pub fn new(alpha: f64, b: f64, sigma: f64) -> Result<Self> {
        Self::with_fields(
            alpha,
            b,
            sigma,
            vec![PhaseField { f: sin_field, df: sin_field_d }, PhaseField { f: cos_field, df: cos_field_d }],
        )
    }

    /// Custom phase functions; at least two, with the squared derivatives
    /// summing to one on a 1000-point grid (to `1e-12`).
    pub fn with_fields(alpha: f64, b: f64, sigma: f64, fields: Vec<PhaseField>) -> Result<Self> {
        check_non_negative("alpha", alpha)?;
        check_non_negative("b", b)?;
        check_non_negative("sigma", sigma)?;
        if fields.len() < 2 {
            return Err(Error::InvalidInput("at least two phase functions are required".into()));
        }
        for i in 0..1000 {
            let t = i as f64 / 1000.0;
            let s: f64 = fields.iter().map(|p| (p.df)(t).powi(2)).sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("sum of squared derivatives is {s} at theta={t}")));
            }
        }
        Ok(Self { alpha, b, sigma, fields })
    }

    pub fn fields(&self) -> &[PhaseField] {
        &self.fields
    }
}

/// Ratio `int v^{1/2} e^{phi} / int v^{-1/2} e^{phi}` for
/// `phi(v) = -c3 v^3 + c1 v` on `(0, inf)`, via `v = w^2` and log-space
/// shifting by the maximum of `phi`.
fn moment_w(c3: f64, c1: f64) -> Result<f64> {
    let vstar = if c1 > 0.0 { (c1 / (3.0 * c3)).sqrt() } else { 0.0 };
    let phi = |v: f64| -c3 * v * v * v + c1 * v;
    let pmax = phi(vstar);
    let mut vmax = (2.0 * vstar).max((40.0 / c3).cbrt());
    while phi(vmax) - pmax > -45.0 {
        vmax *= 2.0;
    }
    let ws = vstar.sqrt();
    let wm = vmax.sqrt();
    let g = |w: f64| (phi(w * w) - pmax).exp();
    let mut den = 0.0;
    let mut num = 0.0;
    for (a, b) in [(0.0, ws), (ws, wm)] {
        if b > a {
            den += integrate(g, a, b, 1e-300, 1e-13)?.value;
            num += integrate(|w| w * w * g(w), a, b, 1e-300, 1e-13)?.value;
        }
    }
    if !(den > 0.0) {
        return Err(Error::QuadratureNonConvergent { estimate: den, error: f64::INFINITY });
    }
    Ok(num / den)
}

/// Top and second Lyapunov exponents of the cylinder model.
///
/// Only the product `b * sigma` enters. With `b * sigma = 0` the pair is the
/// deterministic limit cycle's `(0, -alpha)`.
pub fn lyapunov_quadrature(alpha: f64, b: f64, sigma: f64) -> Result<LyapPair> {
    check_non_negative("alpha", alpha)?;
    check_non_negative("b", b)?;
    check_non_negative("sigma", sigma)?;
    let s = b * sigma;
    if s == 0.0 {
        return Ok(LyapPair { lambda1: 0.0, lambda2: -alpha, method: LyapMethod::Quadrature, se: None });
    }
    let ev = moment_w(s / 6.0, alpha * alpha / (2.0 * s))?;
    let half = 0.5 * s * ev;
    Ok(LyapPair { lambda1: -0.5 * alpha + half, lambda2: -0.5 * alpha - half, method: LyapMethod::Quadrature, se: None })
}

/// Mean of `u` under the rescaled density `u^{-1/2} exp(-k (u^3/6 - u/2))`,
/// integrated directly in `u` with the endpoint singularity left to the
/// adaptive rule.
fn rescaled_mean(k: f64) -> Result<f64> {
    // the exponent peaks at u = 1 with value k/3
    let expo = |u: f64| -k * (u * u * u / 6.0 - 0.5 * u) - k / 3.0;
    let mut umax = 2.0;
    while expo(umax) > -45.0 {
        umax *= 1.5;
    }
    let dens = |u: f64| if u > 0.0 { expo(u).exp() / u.sqrt() } else { 0.0 };
    let mut den = 0.0;
    let mut num = 0.0;
    for (a, b) in [(0.0, 1.0), (1.0, umax)] {
        den += integrate(dens, a, b, 1e-300, 1e-13)?.value;
        num += integrate(|u| u * dens(u), a, b, 1e-300, 1e-13)?.value;
    }
    Ok(num / den)
}

/// `lambda1` through the rescaled density; depends on the parameters only
/// via `alpha` and `k = alpha^3 / (b sigma)^2`.
pub fn lambda1_rescaled(alpha: f64, b: f64, sigma: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("b*sigma", b * sigma)?;
    let k = alpha.powi(3) / (b * sigma).powi(2);
    Ok(0.5 * alpha * (rescaled_mean(k)? - 1.0))
}

static C0: OnceLock<f64> = OnceLock::new();

/// The constant with `sigma_0(alpha, b) = alpha^{3/2} / (c0^{1/2} b)`, found
/// by bisection on `sigma` for `lambda1(1, 1, sigma) = 0`.
pub fn compute_c0() -> Result<f64> {
    if let Some(&c) = C0.get() {
        return Ok(c);
    }
    let f = |s: f64| lyapunov_quadrature(1.0, 1.0, s).map(|p| p.lambda1);
    let (mut lo, mut hi) = (0.2_f64, 20.0_f64);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::BracketingFailure { lo, hi });
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let c = 1.0 / (s * s);
    Ok(*C0.get_or_init(|| c))
}

/// Second route to the constant: bisection on `k` for a unit mean of the
/// rescaled density.
pub fn c0_rescaled() -> Result<f64> {
    let g = |k: f64| rescaled_mean(k).map(|m| m - 1.0);
    let (mut lo, mut hi) = (0.01_f64, 10.0_f64);
    // mean exceeds 1 for small k (chaotic side) and falls below for large k
    if !(g(lo)? > 0.0 && g(hi)? < 0.0) {
        return Err(Error::BracketingFailure { lo, hi });
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Noise level at which the top exponent changes sign.
pub fn sigma_zero(alpha: f64, b: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("b", b)?;
    Ok(alpha.powf(1.5) / (compute_c0()?.sqrt() * b))
}

/// Shared Monte Carlo driver for planar systems: integrates the base point
/// together with two tangent vectors (state layout `[x, y, v1, v2]`), applies
/// Gram–Schmidt every `renorm` time units and returns the two growth rates.
#[allow(clippy::too_many_arguments)]
fn planar_tangent_rates<D, G>(
    drift: D,
    diffusion: G,
    noise_dim: usize,
    x0: [f64; 2],
    t_total: f64,
    step: f64,
    renorm: f64,
    seed: u64,
) -> Result<(f64, f64)>
where
    D: Fn(f64, &[f64], &mut [f64]),
    G: Fn(f64, &[f64], &mut [f64]),
{
    let mut st = SdeStepper::new(drift, diffusion, 6, noise_dim, step, Scheme::HeunStratonovich, seed)?;
    let mut x = [x0[0], x0[1], 1.0, 0.0, 0.0, 1.0];
    let burn = (0.1 * t_total).min(10.0);
    let per = (renorm / step).round().max(1.0) as usize;
    let total_steps = ((t_total + burn) / step).round() as usize;
    let burn_steps = (burn / step).round() as usize;
    let (mut l1, mut l2) = (0.0, 0.0);
    let mut t = 0.0;
    for i in 1..=total_steps {
        st.advance(t, step, &mut x)?;
        t = i as f64 * step;
        if i % per == 0 || i == total_steps {
            let n1 = (x[2] * x[2] + x[3] * x[3]).sqrt();
            x[2] /= n1;
            x[3] /= n1;
            let proj = x[4] * x[2] + x[5] * x[3];
            x[4] -= proj * x[2];
            x[5] -= proj * x[3];
            let n2 = (x[4] * x[4] + x[5] * x[5]).sqrt();
            x[4] /= n2;
            x[5] /= n2;
            if i > burn_steps {
                l1 += n1.ln();
                l2 += n2.ln();
            }
        }
    }
    let span = (total_steps - burn_steps) as f64 * step;
    Ok((l1 / span, l2 / span))
}

fn summarize(rates: Vec<(f64, f64)>) -> LyapPair {
    let v1: Vec<f64> = rates.iter().map(|r| r.0).collect();
    let v2: Vec<f64> = rates.iter().map(|r| r.1).collect();
    let (m1, se) = mean_se(&v1);
    let (m2, _) = mean_se(&v2);
    LyapPair { lambda1: m1, lambda2: m2, method: LyapMethod::MonteCarlo, se: Some(se) }
}

pub const MC_STEP: f64 = 1e-3;
pub const MC_RENORM: f64 = 0.5;

/// Monte Carlo Lyapunov exponents of the cylinder model (Stratonovich noise,
/// Heun scheme), averaged over `n_reps` independent noise paths.
pub fn mc_lyapunov_cylinder(params: &ShearParams, t_total: f64, n_reps: usize, base_seed: u64) -> Result<LyapPair> {
    check_positive("t_total", t_total)?;
    if n_reps < 2 {
        return Err(Error::InvalidInput("need at least two replicates".into()));
    }
    let (alpha, b, sigma) = (params.alpha, params.b, params.sigma);
    let fields = params.fields.clone();
    let m = fields.len();
    let rates: Result<Vec<_>> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let drift = |_: f64, x: &[f64], d: &mut [f64]| {
                d[0] = -alpha * x[0];
                d[1] = 1.0 + b * x[0];
                d[2] = -alpha * x[2];
                d[3] = b * x[2];
                d[4] = -alpha * x[4];
                d[5] = b * x[4];
            };
            let diff = |_: f64, x: &[f64], g: &mut [f64]| {
                for v in g.iter_mut() {
                    *v = 0.0;
                }
                for (i, p) in fields.iter().enumerate() {
                    let dfi = (p.df)(x[1]);
                    g[i] = sigma * (p.f)(x[1]);
                    g[2 * m + i] = sigma * dfi * x[3];
                    g[4 * m + i] = sigma * dfi * x[5];
                }
            };
            planar_tangent_rates(drift, diff, m, [0.0, 0.0], t_total, MC_STEP, MC_RENORM, derive_seed(base_seed, rep as u64))
        })
        .collect();
    Ok(summarize(rates?))
}

/// Monte Carlo Lyapunov exponents of the noisy Hopf normal form with two
/// independent additive noises.
#[allow(clippy::too_many_arguments)]
pub fn mc_lyapunov_hopf(
    alpha: f64,
    beta: f64,
    a: f64,
    b: f64,
    sigma: f64,
    t_total: f64,
    n_reps: usize,
    base_seed: u64,
) -> Result<LyapPair> {
    check_positive("a", a)?;
    check_non_negative("sigma", sigma)?;
    check_positive("t_total", t_total)?;
    if n_reps < 2 {
        return Err(Error::InvalidInput("need at least two replicates".into()));
    }
    let r0 = if alpha > 0.0 { (alpha / a).sqrt() } else { 0.1 };
    let rates: Result<Vec<_>> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let drift = |_: f64, z: &[f64], d: &mut [f64]| {
                let (x, y) = (z[0], z[1]);
                let r2 = x * x + y * y;
                d[0] = alpha * x - beta * y - (a * x - b * y) * r2;
                d[1] = alpha * y + beta * x - (b * x + a * y) * r2;
                let j00 = alpha - a * r2 - 2.0 * x * (a * x - b * y);
                let j01 = -beta + b * r2 - 2.0 * y * (a * x - b * y);
                let j10 = beta - b * r2 - 2.0 * x * (b * x + a * y);
                let j11 = alpha - a * r2 - 2.0 * y * (b * x + a * y);
                for k in [2, 4] {
                    let (u, v) = (z[k], z[k + 1]);
                    d[k] = j00 * u + j01 * v;
                    d[k + 1] = j10 * u + j11 * v;
                }
            };
            let diff = |_: f64, _z: &[f64], g: &mut [f64]| {
                for v in g.iter_mut() {
                    *v = 0.0;
                }
                g[0] = sigma;
                g[3] = sigma;
            };
            planar_tangent_rates(drift, diff, 2, [r0, 0.0], t_total, MC_STEP, MC_RENORM, derive_seed(base_seed, rep as u64))
        })
        .collect();
    Ok(summarize(rates?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_minus_alpha() {
        for &(a, b, s) in &[(1.0, 1.0, 1.0), (0.1, 5.0, 0.01), (3.0, 0.2, 7.0)] {
            let p = lyapunov_quadrature(a, b, s).unwrap();
            assert!((p.lambda1 + p.lambda2 + a).abs() < 1e-12);
        }
    }

    #[test]
    fn axes() {
        let p = lyapunov_quadrature(1.2, 0.0, 3.0).unwrap();
        assert_eq!((p.lambda1, p.lambda2), (0.0, -1.2));
        // alpha = 0 with noise: positive top exponent
        assert!(lyapunov_quadrature(0.0, 1.0, 0.5).unwrap().lambda1 > 0.0);
    }

    #[test]
    fn both_routes_agree() {
        for &(a, b, s) in &[(1.0, 1.0, 1.0), (0.5, 2.0, 0.3), (2.0, 1.0, 4.0)] {
            let l1 = lyapunov_quadrature(a, b, s).unwrap().lambda1;
            let l2 = lambda1_rescaled(a, b, s).unwrap();
            assert!((l1 - l2).abs() < 1e-9, "{l1} vs {l2}");
        }
    }

    #[test]
    fn product_invariance() {
        let a = lyapunov_quadrature(0.7, 2.0, 0.4).unwrap().lambda1;
        let b = lyapunov_quadrature(0.7, 8.0, 0.1).unwrap().lambda1;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn field_condition_checked() {
        let bad = vec![PhaseField { f: sin_field, df: sin_field_d }, PhaseField { f: sin_field, df: sin_field_d }];
        assert!(ShearParams::with_fields(1.0, 1.0, 1.0, bad).is_err());
        assert!(ShearParams::new(1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn c0_matches_and_round_trips() {
        let c0 = compute_c0().unwrap();
        assert!((c0 - 0.2823).abs() < 5e-4);
        let l = lyapunov_quadrature(1.0, 1.0, 1.0 / c0.sqrt()).unwrap().lambda1;
        assert!(l.abs() < 1e-6);
        assert!((c0_rescaled().unwrap() - c0).abs() < 1e-6);
    }

    #[test]
    fn sigma_zero_scaling() {
        let s = sigma_zero(1.0, 1.0).unwrap();
        assert!((s - 1.882).abs() < 2e-3);
        assert!((sigma_zero(4.0, 1.0).unwrap() / s - 8.0).abs() < 1e-12);
        assert!((sigma_zero(1.0, 2.0).unwrap() - s / 2.0).abs() < 1e-14);
    }

    #[test]
    fn caption_signs() {
        assert!(lyapunov_quadrature(1.5, 3.0, 0.5).unwrap().lambda1 < 0.0);
        assert!(lyapunov_quadrature(1.5, 3.0, 2.0).unwrap().lambda1 > 0.0);
    }

    #[test]
    fn mc_cylinder_matches_quadrature() {
        let p = ShearParams::new(1.5, 3.0, 2.0).unwrap();
        let mc = mc_lyapunov_cylinder(&p, 60.0, 6, 11).unwrap();
        let q = lyapunov_quadrature(1.5, 3.0, 2.0).unwrap();
        assert!((mc.lambda1 - q.lambda1).abs() < 3.0 * mc.se.unwrap() + 0.02);
        // trace of the linearization is -alpha along every path
        assert!((mc.lambda1 + mc.lambda2 + 1.5).abs() < 1e-2, "{mc:?}");
    }

    #[test]
    fn hopf_deterministic_cycle() {
        let p = mc_lyapunov_hopf(1.0, 1.0, 1.0, 0.5, 0.0, 50.0, 2, 3).unwrap();
        assert!(p.lambda1.abs() < 2e-3);
    }
}
