//! Linear stability of the homogeneous coexistence state of the
//! Shigesada–Kawasaki–Teramoto competition model and of its four-component
//! fast-reaction approximation, as the growth rate `r1` varies.
//!
//! The domain is `(0, 1)` with Neumann conditions, so perturbations are
//! `cos(n pi x)` with `k_n = n pi`. The paper does not state its domain;
//! counts are also reported per mode, so another interval length `L` is
//! obtained by rescaling `k_n` by `1/L`.
//!
//! A bifurcation point on the homogeneous branch is a zero of the
//! dispersion determinant. Mode 0 zeros are reaction-only and are kept apart
//! from the count.
//!
//! The active-state diffusion of the second species is `d2 + d21 * M1`
//! (not `M2`): only that choice reproduces the cross-diffusion flux
//! `(d2 + d21 u) v` once `v2 = v u / M1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::stats::bisect;

pub const DEFAULT_MODES: usize = 20;
pub const DEFAULT_SCAN: usize = 2000;
/// Fraction of the positivity interval trimmed from each end by default.
pub const WINDOW_SHRINK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SktParams {
    pub r1: f64,
    pub r2: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
    pub d21: f64,
    pub m1: f64,
    pub m2: f64,
}

impl Default for SktParams {
    fn default() -> Self {
        SktParams {
            r1: 4.0,
            r2: 5.0,
            a1: 2.0,
            a2: 3.0,
            b1: 5.0,
            b2: 4.0,
            d1: 0.03,
            d2: 0.03,
            d12: 3.0,
            d21: 3.0,
            m1: 5.0,
            m2: 2.0,
        }
    }
}

impl SktParams {
    pub fn with_r1(self, r1: f64) -> Self {
        SktParams { r1, ..self }
    }

    pub fn competition(&self) -> f64 {
        self.a1 * self.a2 - self.b1 * self.b2
    }

    pub fn d1_hat(&self) -> f64 {
        self.d1 + self.d12 * self.m2
    }

    pub fn d2_hat(&self) -> f64 {
        self.d2 + self.d21 * self.m1
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r2", self.r2),
            ("a1", self.a1),
            ("a2", self.a2),
            ("b1", self.b1),
            ("b2", self.b2),
            ("d12", self.d12),
            ("d21", self.d21),
        ] {
            crate::error::check_non_negative(name, v)?;
        }
        check_positive("d1", self.d1)?;
        check_positive("d2", self.d2)?;
        check_positive("M1", self.m1)?;
        check_positive("M2", self.m2)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coexistence {
    pub u: f64,
    pub v: f64,
    /// `(u1, u2, v1, v2)`: quiet and active splits.
    pub split: [f64; 4],
}

pub fn coexistence_state(p: &SktParams) -> Result<Coexistence> {
    let det = p.competition();
    if det == 0.0 {
        return Err(Error::DegenerateCompetition);
    }
    let u = (p.r1 * p.a2 - p.r2 * p.b1) / det;
    let v = (p.r2 * p.a1 - p.r1 * p.b2) / det;
    if !(u > 0.0 && v > 0.0) {
        return Err(Error::NonpositiveState { u, v });
    }
    let u2 = u * v / p.m2;
    let v2 = v * u / p.m1;
    Ok(Coexistence { u, v, split: [u - u2, u2, v - v2, v2] })
}

/// Open `r1` interval on which `u*, v* > 0` and the quiet fractions
/// `1 - v*/M2`, `1 - u*/M1` stay positive.
pub fn positivity_interval(p: &SktParams) -> Result<(f64, f64)> {
    p.validate()?;
    let det = p.competition();
    if det == 0.0 {
        return Err(Error::DegenerateCompetition);
    }
    // each condition is c0 + c1 * r1 > 0
    let conds = [
        (-p.r2 * p.b1 / det, p.a2 / det),
        (p.r2 * p.a1 / det, -p.b2 / det),
        (1.0 + p.r2 * p.b1 / (det * p.m1), -p.a2 / (det * p.m1)),
        (1.0 - p.r2 * p.a1 / (det * p.m2), p.b2 / (det * p.m2)),
    ];
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for (c0, c1) in conds {
        if c1 > 0.0 {
            lo = lo.max(-c0 / c1);
        } else if c1 < 0.0 {
            hi = hi.min(-c0 / c1);
        } else if c0 <= 0.0 {
            return Err(Error::StateLeavesPositivity);
        }
    }
    if lo < hi && hi.is_finite() {
        Ok((lo, hi))
    } else {
        Err(Error::StateLeavesPositivity)
    }
}

pub fn default_window(p: &SktParams) -> Result<(f64, f64)> {
    let (lo, hi) = positivity_interval(p)?;
    let w = hi - lo;
    Ok((lo + WINDOW_SHRINK * w, hi - WINDOW_SHRINK * w))
}

/// Right-hand side of the four-component reaction part, state `(u1, u2, v1, v2)`.
pub fn fr_reaction(p: &SktParams, eps: f64, delta: f64, s: &[f64; 4]) -> [f64; 4] {
    let [u1, u2, v1, v2] = *s;
    let (u, v) = (u1 + u2, v1 + v2);
    let f = p.r1 - p.a1 * u - p.b1 * v;
    let g = p.r2 - p.b2 * u - p.a2 * v;
    let h = (1.0 - v / p.m2) * u2 - u1 * v / p.m2;
    let k = (1.0 - u / p.m1) * v2 - v1 * u / p.m1;
    [f * u1 + h / eps, f * u2 - h / eps, g * v1 + k / delta, g * v2 - k / delta]
}

/// Hand-derived Jacobian of [`fr_reaction`].
pub fn fr_jacobian(p: &SktParams, eps: f64, delta: f64, s: &[f64; 4]) -> [[f64; 4]; 4] {
    let [u1, u2, v1, v2] = *s;
    let (u, v) = (u1 + u2, v1 + v2);
    let f = p.r1 - p.a1 * u - p.b1 * v;
    let g = p.r2 - p.b2 * u - p.a2 * v;
    // gradients of h and k in (u1, u2, v1, v2)
    let dh = [-v / p.m2, 1.0 - v / p.m2, -u / p.m2, -u / p.m2];
    let dk = [-v / p.m1, -v / p.m1, -u / p.m1, 1.0 - u / p.m1];
    let df = [-p.a1, -p.a1, -p.b1, -p.b1];
    let dg = [-p.b2, -p.b2, -p.a2, -p.a2];
    let mut j = [[0.0; 4]; 4];
    for c in 0..4 {
        j[0][c] = df[c] * u1 + dh[c] / eps;
        j[1][c] = df[c] * u2 - dh[c] / eps;
        j[2][c] = dg[c] * v1 + dk[c] / delta;
        j[3][c] = dg[c] * v2 - dk[c] / delta;
    }
    j[0][0] += f;
    j[1][1] += f;
    j[2][2] += g;
    j[3][3] += g;
    j
}

/// Largest relative deviation between [`fr_jacobian`] and central
/// differences of [`fr_reaction`].
pub fn jacobian_fd_error(p: &SktParams, eps: f64, delta: f64, s: &[f64; 4]) -> f64 {
    let j = fr_jacobian(p, eps, delta, s);
    let scale = j.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
    let mut worst = 0.0_f64;
    for c in 0..4 {
        let h = 1e-6 * s[c].abs().max(1e-3);
        let (mut sp, mut sm) = (*s, *s);
        sp[c] += h;
        sm[c] -= h;
        let fp = fr_reaction(p, eps, delta, &sp);
        let fm = fr_reaction(p, eps, delta, &sm);
        for r in 0..4 {
            let fd = (fp[r] - fm[r]) / (2.0 * h);
            worst = worst.max((fd - j[r][c]).abs() / scale);
        }
    }
    worst
}

/// `eps * delta * det(J - k^2 D)` for the four-component system. The
/// prefactor is positive; it removes the `1/(eps delta)` growth so the value
/// has a finite limit as both go to zero.
pub fn dispersion_det_4comp(p: &SktParams, eps: f64, delta: f64, k2: f64) -> Result<f64> {
    let st = coexistence_state(p)?;
    let [_, u2, _, v2] = st.split;
    let (u, v) = (st.u, st.v);
    let f = p.r1 - p.a1 * u - p.b1 * v;
    let g = p.r2 - p.b2 * u - p.a2 * v;
    let dh = [-v / p.m2, 1.0 - v / p.m2, -u / p.m2, -u / p.m2];
    let dk = [-v / p.m1, -v / p.m1, -u / p.m1, 1.0 - u / p.m1];
    let df = [-p.a1, -p.a1, -p.b1, -p.b1];
    let dg = [-p.b2, -p.b2, -p.a2, -p.a2];
    let diff = [p.d1, p.d1_hat(), p.d2, p.d2_hat()];
    // rows: (u1 + u2) equation, eps * u2 equation, (v1 + v2) equation, delta * v2 equation
    let mut m = [[0.0; 4]; 4];
    for c in 0..4 {
        m[0][c] = df[c] * u;
        m[1][c] = eps * df[c] * u2 - dh[c];
        m[2][c] = dg[c] * v;
        m[3][c] = delta * dg[c] * v2 - dk[c];
    }
    m[0][0] += f - k2 * diff[0];
    m[0][1] += f - k2 * diff[1];
    m[1][1] += eps * (f - k2 * diff[1]);
    m[2][2] += g - k2 * diff[2];
    m[2][3] += g - k2 * diff[3];
    m[3][3] += delta * (g - k2 * diff[3]);
    Ok(det4(m))
}

/// `det(J_react - k^2 A)` for the two-component cross-diffusion system.
pub fn dispersion_det_limit(p: &SktParams, k2: f64) -> Result<f64> {
    let st = coexistence_state(p)?;
    let (u, v) = (st.u, st.v);
    // at the coexistence state f = g = 0, so J_react = diag(u, v) * grad(f, g)
    let j = [[-p.a1 * u, -p.b1 * u], [-p.b2 * v, -p.a2 * v]];
    let a = [[p.d1 + p.d12 * v, p.d12 * u], [p.d21 * v, p.d2 + p.d21 * u]];
    let m00 = j[0][0] - k2 * a[0][0];
    let m01 = j[0][1] - k2 * a[0][1];
    let m10 = j[1][0] - k2 * a[1][0];
    let m11 = j[1][1] - k2 * a[1][1];
    Ok(m00 * m11 - m01 * m10)
}

fn det4(mut m: [[f64; 4]; 4]) -> f64 {
    let mut det = 1.0;
    for col in 0..4 {
        let piv = (col..4).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..4 {
            let fac = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] -= fac * m[col][c];
            }
        }
    }
    det
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifCount {
    /// Zeros for modes `n >= 1`.
    pub count: usize,
    pub crossing_r1_values: Vec<f64>,
    /// Mode index of each crossing, aligned with `crossing_r1_values`.
    pub modes_involved: Vec<usize>,
    /// Reaction-only zeros (mode 0).
    pub mode0_crossings: Vec<f64>,
    /// Dispersion determinant at each crossing, after bisection.
    pub residuals: Vec<f64>,
    pub window: (f64, f64),
    /// Set when the requested window had to be clipped to the positivity interval.
    pub clipped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub r1_window: Option<(f64, f64)>,
    pub n_modes: usize,
    pub n_scan: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { r1_window: None, n_modes: DEFAULT_MODES, n_scan: DEFAULT_SCAN }
    }
}

fn resolve_window(p: &SktParams, w: Option<(f64, f64)>) -> Result<((f64, f64), bool)> {
    let def = default_window(p)?;
    let Some((lo, hi)) = w else {
        return Ok((def, false));
    };
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!("r1 window ({lo}, {hi}) is empty")));
    }
    let (plo, phi) = positivity_interval(p)?;
    let (clo, chi) = (lo.max(def.0), hi.min(def.1));
    let clipped = lo <= plo || hi >= phi;
    if !(clo < chi) {
        return Err(Error::StateLeavesPositivity);
    }
    if clipped {
        Ok(((clo, chi), true))
    } else {
        Ok(((lo, hi), false))
    }
}

fn scan<F>(det: F, window: (f64, f64), opts: &ScanOptions, clipped: bool) -> Result<BifCount>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    if opts.n_scan < 2 {
        return Err(Error::InvalidInput("n_scan must be at least 2".into()));
    }
    let (lo, hi) = window;
    let per_mode: Vec<Result<Vec<(f64, f64)>>> = (0..=opts.n_modes)
        .into_par_iter()
        .map(|n| {
            let k = n as f64 * std::f64::consts::PI;
            let k2 = k * k;
            let at = |r1: f64| det(r1, k2);
            let mut roots = Vec::new();
            let mut r_prev = lo;
            let mut d_prev = at(lo)?;
            for i in 1..opts.n_scan {
                let r = lo + (hi - lo) * i as f64 / (opts.n_scan - 1) as f64;
                let d = at(r)?;
                if d_prev == 0.0 {
                    roots.push((r_prev, 0.0));
                } else if d_prev.signum() != d.signum() && d != 0.0 {
                    let root = bisect(|x| at(x).unwrap_or(f64::NAN), r_prev, r, 1e-15, 200)
                        .ok_or(Error::BracketingFailure { lo: r_prev, hi: r })?;
                    roots.push((root, at(root)?));
                }
                r_prev = r;
                d_prev = d;
            }
            Ok(roots)
        })
        .collect();
    let mut crossings = Vec::new();
    let mut mode0 = Vec::new();
    for (n, roots) in per_mode.into_iter().enumerate() {
        for (r, res) in roots? {
            if n == 0 {
                mode0.push(r);
            } else {
                crossings.push((r, n, res));
            }
        }
    }
    crossings.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(BifCount {
        count: crossings.len(),
        crossing_r1_values: crossings.iter().map(|c| c.0).collect(),
        modes_involved: crossings.iter().map(|c| c.1).collect(),
        mode0_crossings: mode0,
        residuals: crossings.iter().map(|c| c.2).collect(),
        window,
        clipped,
    })
}

/// Zeros of the four-component dispersion determinant along `r1`. The `r1`
/// field of `params` is ignored.
pub fn count_bifurcations_4comp(params: &SktParams, eps: f64, delta: f64, opts: &ScanOptions) -> Result<BifCount> {
    check_positive("eps", eps)?;
    check_positive("delta", delta)?;
    let (window, clipped) = resolve_window(params, opts.r1_window)?;
    scan(|r1, k2| dispersion_det_4comp(&params.with_r1(r1), eps, delta, k2), window, opts, clipped)
}

/// Same scan for the cross-diffusion limit.
pub fn count_bifurcations_limit(params: &SktParams, opts: &ScanOptions) -> Result<BifCount> {
    let (window, clipped) = resolve_window(params, opts.r1_window)?;
    scan(|r1, k2| dispersion_det_limit(&params.with_r1(r1), k2), window, opts, clipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn coexistence_defaults() {
        let p = SktParams::default();
        assert!(p.competition() < 0.0);
        let c = coexistence_state(&p).unwrap();
        assert!((c.u - 13.0 / 14.0).abs() < 1e-15 && (c.v - 3.0 / 7.0).abs() < 1e-15);
        assert!((c.split[0] + c.split[1] - c.u).abs() < 1e-15);
        assert!((c.split[2] + c.split[3] - c.v).abs() < 1e-15);
        let (lo, hi) = positivity_interval(&p).unwrap();
        assert!((lo - 2.5).abs() < 1e-12 && (hi - 25.0 / 3.0).abs() < 1e-12);
        assert!(matches!(coexistence_state(&p.with_r1(9.0)), Err(Error::NonpositiveState { .. })));
        let deg = SktParams { a1: 4.0, a2: 5.0, ..p };
        assert_eq!(coexistence_state(&deg), Err(Error::DegenerateCompetition));
    }

    #[test]
    fn coexistence_is_an_equilibrium() {
        let p = SktParams::default();
        let c = coexistence_state(&p).unwrap();
        let rhs = fr_reaction(&p, 1e-3, 1e-2, &c.split);
        assert!(rhs.iter().all(|x| x.abs() < 1e-10), "{rhs:?}");
    }

    #[test]
    fn jacobian_matches_differences() {
        let mut rng = crate::kernel::rng_from_seed(11);
        let p = SktParams::default();
        for _ in 0..10 {
            let s = [rng.random_range(0.1..2.0), rng.random_range(0.1..2.0), rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)];
            let eps = 10f64.powf(rng.random_range(-4.0..-1.0));
            let delta = 10f64.powf(rng.random_range(-4.0..-1.0));
            let e = jacobian_fd_error(&p.with_r1(rng.random_range(3.0..8.0)), eps, delta, &s);
            assert!(e < 1e-6, "{e}");
        }
    }

    #[test]
    fn scaled_determinant_matches_plain() {
        let p = SktParams::default().with_r1(4.3);
        let c = coexistence_state(&p).unwrap();
        let (eps, delta, k2) = (0.05, 0.01, 9.0);
        let mut m = fr_jacobian(&p, eps, delta, &c.split);
        let diff = [p.d1, p.d1_hat(), p.d2, p.d2_hat()];
        for i in 0..4 {
            m[i][i] -= k2 * diff[i];
        }
        let plain = det4(m) * eps * delta;
        let scaled = dispersion_det_4comp(&p, eps, delta, k2).unwrap();
        assert!((plain - scaled).abs() < 1e-9 * scaled.abs().max(1.0), "{plain} {scaled}");
    }

    #[test]
    fn det4_against_cofactor() {
        let m = [[2.0, -1.0, 0.5, 3.0], [1.0, 4.0, -2.0, 0.0], [0.0, 1.5, 1.0, -1.0], [3.0, 0.0, 2.0, 1.0]];
        let minor = |r: usize, c: usize| {
            let rows: Vec<usize> = (0..4).filter(|&i| i != r).collect();
            let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
            let a = |i: usize, j: usize| m[rows[i]][cols[j]];
            a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
        };
        let cof: f64 = (0..4).map(|c| if c % 2 == 0 { 1.0 } else { -1.0 } * m[0][c] * minor(0, c)).sum();
        assert!((det4(m) - cof).abs() < 1e-12);
    }

    #[test]
    fn window_is_clipped() {
        let p = SktParams::default();
        let opts = ScanOptions { r1_window: Some((0.0, 5.0)), n_modes: 3, n_scan: 50 };
        let b = count_bifurcations_limit(&p, &opts).unwrap();
        assert!(b.clipped && b.window.0 > 2.5);
        let opts = ScanOptions { r1_window: Some((9.0, 10.0)), ..opts };
        assert_eq!(count_bifurcations_limit(&p, &opts), Err(Error::StateLeavesPositivity));
    }

    #[test]
    fn limit_count_and_refinement() {
        let p = SktParams::default();
        let coarse = count_bifurcations_limit(&p, &ScanOptions { n_scan: 1000, ..Default::default() }).unwrap();
        let fine = count_bifurcations_limit(&p, &ScanOptions { n_scan: 10_000, ..Default::default() }).unwrap();
        assert!(coarse.count == 2 || coarse.count == 4, "{}", coarse.count);
        assert_eq!(coarse.count, fine.count);
        assert_eq!(coarse.modes_involved, fine.modes_involved);
        for (a, b) in coarse.crossing_r1_values.iter().zip(&fine.crossing_r1_values) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(coarse.residuals.iter().all(|r| r.abs() < 1e-9));
        assert!(coarse.mode0_crossings.is_empty());
    }

    #[test]
    fn four_component_converges_to_limit() {
        let p = SktParams::default();
        let opts = ScanOptions::default();
        let lim = count_bifurcations_limit(&p, &opts).unwrap();
        let mut prev_gap = f64::INFINITY;
        for k in 2..=5 {
            let e = 10f64.powi(-k);
            let b = count_bifurcations_4comp(&p, e, e, &opts).unwrap();
            assert_eq!(b.count, lim.count, "k = {k}");
            assert_eq!(b.modes_involved, lim.modes_involved);
            assert!(b.residuals.iter().all(|r| r.abs() < 1e-9));
            let gap = b.crossing_r1_values.iter().zip(&lim.crossing_r1_values).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
            assert!(gap < prev_gap, "k = {k}: {gap} vs {prev_gap}");
            prev_gap = gap;
        }
    }

    #[test]
    fn plain_diffusion_has_no_crossings() {
        let p = SktParams { d1: 1.0, d2: 1.0, d12: 0.0, d21: 0.0, ..Default::default() };
        let opts = ScanOptions::default();
        assert_eq!(count_bifurcations_limit(&p, &opts).unwrap().count, 0);
        assert_eq!(count_bifurcations_4comp(&p, 1e-3, 1e-3, &opts).unwrap().count, 0);
    }
}
