//! Lyapunov exponents by tangent-vector renormalization.

use crate::error::{Error, Result};
use crate::kernel::{OdeOptions, OdeSolver, Control};
use crate::stats::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenettinOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial stretch whose growth is discarded.
    pub transient: f64,
    pub max_step: Option<f64>,
}

impl Default for BenettinOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-11, transient: 0.0, max_step: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapEstimate {
    pub lambda: f64,
    /// Standard error of the slope of cumulative log-growth against time.
    pub se: f64,
}

/// Compare `jacobian` at `x` against central differences; returns the worst
/// relative column error.
pub fn check_jacobian<F, J>(field: &F, jacobian: &J, x: &[f64]) -> Result<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
    J: Fn(f64, &[f64], &mut [f64]),
{
    let n = x.len();
    let mut jac = vec![0.0; n * n];
    jacobian(0.0, x, &mut jac);
    let scale = jac.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut worst = 0.0_f64;
    let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
    let (mut fp, mut fm) = (vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1e-3);
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        field(0.0, &xp, &mut fp);
        field(0.0, &xm, &mut fm);
        xp[j] = x[j];
        xm[j] = x[j];
        for i in 0..n {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            worst = worst.max((fd - jac[i * n + j]).abs() / scale);
        }
    }
    Ok(worst)
}

/// Growth rates of the leading `k` directions: the state is integrated with
/// `k` tangent vectors that are Gram–Schmidt orthonormalized every
/// `renorm` time units. Returns per-exponent estimates.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_spectrum<F, J>(
    field: &F,
    jacobian: &J,
    state0: &[f64],
    k: usize,
    t_total: f64,
    renorm: f64,
    opts: &BenettinOptions,
) -> Result<Vec<LyapEstimate>>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
    J: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    let n = state0.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("k = {k} must be in 1..={n}")));
    }
    if !(t_total > 0.0 && renorm > 0.0 && renorm <= t_total) {
        return Err(Error::InvalidInput("need 0 < renorm <= t_total".into()));
    }
    let rel = check_jacobian(field, jacobian, state0)?;
    if rel > 1e-5 {
        return Err(Error::JacobianMismatch { rel_err: rel });
    }
    let dim = n * (1 + k);
    let aug = |t: f64, z: &[f64], d: &mut [f64]| {
        field(t, &z[..n], &mut d[..n]);
        let mut jac = [0.0f64; 64];
        let mut big;
        let jm: &mut [f64] = if n * n <= 64 {
            &mut jac[..n * n]
        } else {
            big = vec![0.0; n * n];
            &mut big
        };
        jacobian(t, &z[..n], jm);
        for c in 0..k {
            let v = &z[n * (1 + c)..n * (2 + c)];
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += jm[i * n + j] * v[j];
                }
                d[n * (1 + c) + i] = s;
            }
        }
    };
    let mut z = vec![0.0; dim];
    z[..n].copy_from_slice(state0);
    for c in 0..k {
        z[n * (1 + c) + c] = 1.0;
    }
    let mut o = OdeOptions::tol(opts.rel_tol, opts.abs_tol);
    o.max_step = opts.max_step;
    let mut solver = OdeSolver::new(dim, o)?;
    let mut t = 0.0;
    if opts.transient > 0.0 {
        let (_, zz) = solver.drive(&aug, 0.0, &z, opts.transient, |_, _, _| Control::Continue)?;
        z = zz;
        gram_schmidt(&mut z, n, k);
        t = opts.transient;
    }
    let n_chunks = (t_total / renorm).round().max(1.0) as usize;
    let mut cum = vec![0.0; k];
    let mut times = Vec::with_capacity(n_chunks + 1);
    let mut logs: Vec<Vec<f64>> = vec![Vec::with_capacity(n_chunks + 1); k];
    times.push(0.0);
    for l in logs.iter_mut() {
        l.push(0.0);
    }
    for i in 0..n_chunks {
        let t1 = t + renorm;
        let (_, zz) = solver.drive(&aug, t, &z, t1, |_, _, _| Control::Continue)?;
        z = zz;
        t = t1;
        let norms = gram_schmidt(&mut z, n, k);
        for c in 0..k {
            cum[c] += norms[c].ln();
            logs[c].push(cum[c]);
        }
        times.push((i + 1) as f64 * renorm);
    }
    let span = n_chunks as f64 * renorm;
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let se = linear_fit(&times, &logs[c]).map(|f| f.slope_se).unwrap_or(f64::INFINITY);
        out.push(LyapEstimate { lambda: cum[c] / span, se: if se.is_finite() { se } else { 0.0 } });
    }
    Ok(out)
}

fn gram_schmidt(z: &mut [f64], n: usize, k: usize) -> Vec<f64> {
    let mut norms = vec![0.0; k];
    for c in 0..k {
        for p in 0..c {
            let mut dot = 0.0;
            for i in 0..n {
                dot += z[n * (1 + c) + i] * z[n * (1 + p) + i];
            }
            for i in 0..n {
                z[n * (1 + c) + i] -= dot * z[n * (1 + p) + i];
            }
        }
        let nr = (0..n).map(|i| z[n * (1 + c) + i].powi(2)).sum::<f64>().sqrt();
        for i in 0..n {
            z[n * (1 + c) + i] /= nr;
        }
        norms[c] = nr;
    }
    norms
}

/// Top exponent by renormalizing a single tangent vector.
pub fn top_lyapunov_benettin<F, J>(field: &F, jacobian: &J, state0: &[f64], t_total: f64, renorm: f64) -> Result<LyapEstimate>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
    J: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    top_lyapunov_benettin_with(field, jacobian, state0, t_total, renorm, &BenettinOptions::default())
}

pub fn top_lyapunov_benettin_with<F, J>(
    field: &F,
    jacobian: &J,
    state0: &[f64],
    t_total: f64,
    renorm: f64,
    opts: &BenettinOptions,
) -> Result<LyapEstimate>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
    J: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    Ok(lyapunov_spectrum(field, jacobian, state0, 1, t_total, renorm, opts)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay() {
        let f = |_: f64, x: &[f64], d: &mut [f64]| d[0] = -0.7 * x[0];
        let j = |_: f64, _: &[f64], m: &mut [f64]| m[0] = -0.7;
        let e = top_lyapunov_benettin(&f, &j, &[1.0], 20.0, 1.0).unwrap();
        assert!((e.lambda + 0.7).abs() < 1e-6);
    }

    #[test]
    fn mismatch_detected() {
        let f = |_: f64, x: &[f64], d: &mut [f64]| d[0] = x[0] * x[0];
        let j = |_: f64, x: &[f64], m: &mut [f64]| m[0] = x[0];
        assert!(matches!(top_lyapunov_benettin(&f, &j, &[1.0], 1.0, 0.5), Err(Error::JacobianMismatch { .. })));
    }

    #[test]
    fn van_der_pol_neutral() {
        let mu = 1.0;
        let f = move |_: f64, x: &[f64], d: &mut [f64]| {
            d[0] = x[1];
            d[1] = mu * (1.0 - x[0] * x[0]) * x[1] - x[0];
        };
        let j = move |_: f64, x: &[f64], m: &mut [f64]| {
            m[0] = 0.0;
            m[1] = 1.0;
            m[2] = -2.0 * mu * x[0] * x[1] - 1.0;
            m[3] = mu * (1.0 - x[0] * x[0]);
        };
        let o = BenettinOptions { transient: 50.0, ..Default::default() };
        let s = lyapunov_spectrum(&f, &j, &[2.0, 0.0], 2, 2000.0, 1.0, &o).unwrap();
        assert!(s[0].lambda.abs() < 1e-3, "{s:?}");
        assert!(s[1].lambda < -0.5);
    }
}
