//! The scaled Olsen model of the peroxidase-oxidase reaction in slow time `s`.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::kernel::{integrate_ode_with, Control, OdeOptions, Trajectory};

use super::lyap::{lyapunov_spectrum, BenettinOptions};
use super::maxima::count_maxima;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsenParams {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    /// Linear decay rate of `a`.
    pub alpha: f64,
}

impl Default for OlsenParams {
    fn default() -> Self {
        Self { p1: 0.97, p2: 0.98, p3: 3.93, p4: 1.2e-5, alpha: 0.1 }
    }
}

/// Right-hand side `(da/ds, db/ds, dx/ds, dy/ds)`.
pub fn olsen_rhs(z: &[f64], eps: f64, delta: f64, p: &OlsenParams) -> [f64; 4] {
    let (a, b, x, y) = (z[0], z[1], z[2], z[3]);
    let aby = a * b * y;
    [
        delta * delta * (p.p1 - p.alpha * a) - aby,
        eps * (delta * eps - delta * b * x) - delta * aby,
        (-x * x + eps * (b - p.p2) * x + 3.0 * aby + eps * eps * p.p4) / eps,
        p.p3 * (x * x - y - aby),
    ]
}

/// Row-major Jacobian of [`olsen_rhs`].
pub fn olsen_jacobian(z: &[f64], eps: f64, delta: f64, p: &OlsenParams, m: &mut [f64]) {
    let (a, b, x, y) = (z[0], z[1], z[2], z[3]);
    m[..4].copy_from_slice(&[-delta * delta * p.alpha - b * y, -a * y, 0.0, -a * b]);
    m[4..8].copy_from_slice(&[-delta * b * y, -eps * delta * x - delta * a * y, -eps * delta * b, -delta * a * b]);
    m[8..12].copy_from_slice(&[
        3.0 * b * y / eps,
        x + 3.0 * a * y / eps,
        (-2.0 * x + eps * (b - p.p2)) / eps,
        3.0 * a * b / eps,
    ]);
    m[12..].copy_from_slice(&[-p.p3 * b * y, -p.p3 * a * y, 2.0 * p.p3 * x, -p.p3 * (1.0 + a * b)]);
}

pub fn olsen_trajectory(
    eps: f64,
    delta: f64,
    p: &OlsenParams,
    state0: &[f64; 4],
    t_end: f64,
    opts: &OdeOptions<f64>,
) -> Result<Trajectory<f64>> {
    check_positive("eps", eps)?;
    check_positive("delta", delta)?;
    let p = *p;
    Ok(integrate_ode_with(
        move |_, z: &[f64], d: &mut [f64]| d.copy_from_slice(&olsen_rhs(z, eps, delta, &p)),
        state0,
        (0.0, t_end),
        opts,
        |_, _| Control::Continue,
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OscKind {
    Relaxation,
    MMO,
    Chaotic,
}

/// Oscillation label with the two raw ingredients it is derived from. The
/// labels are conjectural.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscLabel {
    pub kind: OscKind,
    pub maxima_count: usize,
    pub lyap_sign: i8,
    pub lambda1: f64,
    pub lambda1_se: f64,
    pub lambda2: f64,
    pub k0: usize,
    pub conjectural: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsenConfig {
    pub params: OlsenParams,
    /// Component whose maxima are counted (default `x`).
    pub var: usize,
    /// Window length in units of `1/eps` of slow time.
    pub k_window: f64,
    /// Prominence floor as a fraction of the component's range over the run.
    pub prominence_frac: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub lyap_renorm: f64,
}

impl Default for OlsenConfig {
    fn default() -> Self {
        Self {
            params: OlsenParams::default(),
            var: 2,
            k_window: 20.0,
            prominence_frac: 0.05,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            lyap_renorm: 10.0,
        }
    }
}

impl OlsenConfig {
    pub fn window(&self, eps: f64) -> f64 {
        self.k_window / eps
    }

    fn opts(&self) -> OdeOptions<f64> {
        OdeOptions::tol(self.rel_tol, self.abs_tol)
    }
}

pub const OLSEN_SEED_STATE: [f64; 4] = [1.0, 1.0, 0.1, 0.1];

/// Maxima per consecutive window after a transient.
pub fn olsen_window_counts(
    eps: f64,
    delta: f64,
    t_transient: f64,
    n_windows: usize,
    seed_state: &[f64; 4],
    cfg: &OlsenConfig,
) -> Result<Vec<usize>> {
    let w = cfg.window(eps);
    let t_end = t_transient + n_windows as f64 * w;
    let tr = olsen_trajectory(eps, delta, &cfg.params, seed_state, t_end, &cfg.opts())?;
    let v: Vec<f64> = tr.iter().filter(|(t, _)| *t >= t_transient).map(|(_, z)| z[cfg.var]).collect();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let prom = cfg.prominence_frac * (hi - lo).max(1e-300);
    Ok((0..n_windows)
        .map(|i| {
            let a = t_transient + i as f64 * w;
            count_maxima(&tr, cfg.var, (a, a + w), prom)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K0Calibration {
    pub k0: usize,
    pub counts: Vec<usize>,
    pub consistent: bool,
}

/// Calibrate the relaxation maxima count at `delta = 10 eps^2`.
pub fn calibrate_k0(eps: f64, t_transient: f64, cfg: &OlsenConfig) -> Result<K0Calibration> {
    let counts = olsen_window_counts(eps, 10.0 * eps * eps, t_transient, 2, &OLSEN_SEED_STATE, cfg)?;
    let k0 = counts[0];
    if k0 == 0 {
        return Err(Error::Degenerate("no maxima in the calibration window".into()));
    }
    Ok(K0Calibration { k0, consistent: counts.windows(2).all(|w| w[0] == w[1]), counts })
}

/// Label from the two raw fields, with `k0` from [`calibrate_k0`].
pub fn osc_kind(maxima_count: usize, lyap_sign: i8, k0: usize) -> Result<OscKind> {
    match lyap_sign {
        1 => Ok(OscKind::Chaotic),
        -1 if maxima_count == k0 => Ok(OscKind::Relaxation),
        -1 if maxima_count > k0 => Ok(OscKind::MMO),
        _ => Err(Error::Ambiguous),
    }
}

/// Sign of the leading non-neutral exponent. A periodic orbit carries a zero
/// exponent along the flow, so when the top estimate is within three
/// standard errors of zero the next one decides.
pub fn leading_sign(l1: f64, se1: f64, l2: f64, se2: f64) -> Result<i8> {
    let thr = 3.0 * se1;
    if l1 > thr {
        Ok(1)
    } else if l1 < -thr {
        Ok(-1)
    } else if l2 < -3.0 * se2 {
        Ok(-1)
    } else {
        Err(Error::Indeterminate { estimate: l1, se: se1 })
    }
}

/// Classify the oscillation pattern at `(eps, delta)`, calibrating `K0` on
/// the fly over a window of the same length. Uses the default configuration.
pub fn classify_olsen(eps: f64, delta: f64, t_transient: f64, t_window: f64, seed_state: &[f64; 4]) -> Result<OscLabel> {
    check_positive("t_window", t_window)?;
    let cfg = OlsenConfig::default();
    let k0 = calibrate_k0(eps, t_transient, &OlsenConfig { k_window: t_window * eps, ..cfg })?.k0;
    classify_olsen_with(eps, delta, t_transient, t_window, seed_state, k0, &cfg)
}

pub fn classify_olsen_with(
    eps: f64,
    delta: f64,
    t_transient: f64,
    t_window: f64,
    seed_state: &[f64; 4],
    k0: usize,
    cfg: &OlsenConfig,
) -> Result<OscLabel> {
    check_positive("t_window", t_window)?;
    let pre = olsen_trajectory(eps, delta, &cfg.params, seed_state, t_transient.max(1e-9), &cfg.opts())?;
    let (_, z0) = pre.last().ok_or(Error::Ambiguous)?;
    let z0: [f64; 4] = [z0[0], z0[1], z0[2], z0[3]];
    let count_cfg = OlsenConfig { k_window: t_window * eps, ..*cfg };
    let maxima_count = olsen_window_counts(eps, delta, 0.0, 1, &z0, &count_cfg)?[0];
    let p = cfg.params;
    let f = move |_: f64, z: &[f64], d: &mut [f64]| d.copy_from_slice(&olsen_rhs(z, eps, delta, &p));
    let j = move |_: f64, z: &[f64], m: &mut [f64]| olsen_jacobian(z, eps, delta, &p, m);
    let bo = BenettinOptions { rel_tol: cfg.rel_tol, abs_tol: cfg.abs_tol, transient: 0.0, max_step: None };
    let renorm = cfg.lyap_renorm.min(t_window);
    let s = lyapunov_spectrum(&f, &j, &z0, 2, t_window, renorm, &bo)?;
    let lyap_sign = leading_sign(s[0].lambda, s[0].se, s[1].lambda, s[1].se)?;
    let kind = osc_kind(maxima_count, lyap_sign, k0)?;
    Ok(OscLabel {
        kind,
        maxima_count,
        lyap_sign,
        lambda1: s[0].lambda,
        lambda1_se: s[0].se,
        lambda2: s[1].lambda,
        k0,
        conjectural: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // hand-written evaluator kept separate from `olsen_rhs`
    fn reference(z: [f64; 4], e: f64, d: f64) -> [f64; 4] {
        let [a, b, x, y] = z;
        let (p1, p2, p3, p4, al) = (0.97, 0.98, 3.93, 1.2e-5, 0.1);
        let da = d * d * p1 - d * d * al * a - a * b * y;
        let db = d * e * e - e * d * b * x - d * a * b * y;
        let dx = -x * x / e + (b - p2) * x + 3.0 * a * b * y / e + e * p4;
        let dy = p3 * x * x - p3 * y - p3 * a * b * y;
        [da, db, dx, dy]
    }

    #[test]
    fn rhs_at_zero_and_generic() {
        let p = OlsenParams::default();
        let r = olsen_rhs(&[0.0; 4], 0.1, 0.2, &p);
        let expect = [0.04 * 0.97, 0.2 * 0.01, 0.1 * 1.2e-5, 0.0];
        for i in 0..4 {
            assert!((r[i] - expect[i]).abs() < 1e-15);
        }
        let z = [0.3, 1.7, 0.05, 0.4];
        let r = olsen_rhs(&z, 0.07, 0.02, &p);
        let q = reference(z, 0.07, 0.02);
        for i in 0..4 {
            assert!((r[i] - q[i]).abs() <= 1e-13 * q[i].abs().max(1.0));
        }
        // y = 0 leaves the linear a-equation
        let r = olsen_rhs(&[0.4, 1.0, 0.2, 0.0], 0.1, 0.3, &OlsenParams { alpha: 0.5, ..p });
        assert!((r[0] - 0.09 * (0.97 - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn jacobian_consistent() {
        let p = OlsenParams::default();
        let f = |_: f64, z: &[f64], d: &mut [f64]| d.copy_from_slice(&olsen_rhs(z, 0.05, 0.02, &p));
        let j = |_: f64, z: &[f64], m: &mut [f64]| olsen_jacobian(z, 0.05, 0.02, &p, m);
        let e = super::super::lyap::check_jacobian(&f, &j, &[0.4, 1.1, 0.03, 0.2]).unwrap();
        assert!(e < 1e-6, "{e}");
    }

    #[test]
    fn label_rule() {
        assert_eq!(osc_kind(3, -1, 3).unwrap(), OscKind::Relaxation);
        assert_eq!(osc_kind(5, -1, 3).unwrap(), OscKind::MMO);
        assert_eq!(osc_kind(1, 1, 3).unwrap(), OscKind::Chaotic);
        assert!(osc_kind(2, -1, 3).is_err());
        assert_eq!(leading_sign(1e-6, 1e-5, -0.3, 1e-3).unwrap(), -1);
        assert_eq!(leading_sign(0.05, 1e-3, -0.3, 1e-3).unwrap(), 1);
        assert!(leading_sign(1e-6, 1e-5, 1e-6, 1e-5).is_err());
        assert_eq!(leading_sign(-5e-5, 2e-6, -1e-6, 1e-3).unwrap(), -1);
    }
}
