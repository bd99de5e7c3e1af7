use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, Error, Result};
use crate::kernel::{derive_seed, rng_from_seed};
use crate::stats::mean_se;

/// `U0 = [[-d, 1], [0, -d]]`, `U1 = [[-d, 0], [-1, -d]]`, switched at rate
/// `1/eps` in both directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSwitching {
    delta: f64,
    eps: f64,
}

impl LinearSwitching {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        check_positive("eps", eps)?;
        check_non_negative("delta", delta)?;
        Ok(Self { delta, eps })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn matrix(&self, mode: usize) -> [[f64; 2]; 2] {
        let d = self.delta;
        if mode == 0 {
            [[-d, 1.0], [0.0, -d]]
        } else {
            [[-d, 0.0], [-1.0, -d]]
        }
    }

    /// `exp(U_mode t) x`. Both matrices are `-delta I + N` with `N^2 = 0`.
    pub fn flow(&self, mode: usize, t: f64, x: [f64; 2]) -> [f64; 2] {
        let s = (-self.delta * t).exp();
        if mode == 0 {
            [s * (x[0] + t * x[1]), s * x[1]]
        } else {
            [s * x[0], s * (x[1] - t * x[0])]
        }
    }
}

/// True when `m` has a single eigenvalue `-delta` and a one-dimensional
/// eigenspace. For 2x2 this means `(m + delta I)^2 = 0` and `m + delta I != 0`,
/// which is checked exactly on the integer entries.
pub fn is_defective(m: [[i64; 2]; 2], delta: i64) -> bool {
    let n = [[m[0][0] + delta, m[0][1]], [m[1][0], m[1][1] + delta]];
    let sq = [
        [n[0][0] * n[0][0] + n[0][1] * n[1][0], n[0][0] * n[0][1] + n[0][1] * n[1][1]],
        [n[1][0] * n[0][0] + n[1][1] * n[1][0], n[1][0] * n[0][1] + n[1][1] * n[1][1]],
    ];
    sq == [[0, 0], [0, 0]] && n != [[0, 0], [0, 0]]
}

/// Angular speed `d theta/dt` of mode `mode` at angle `theta`. The nilpotent
/// parts `x' = y` and `y' = -x` give `-sin^2` and `-cos^2`; `-delta I` does not
/// rotate.
pub fn angular_field(mode: usize, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    if mode == 0 {
        -s * s
    } else {
        -c * c
    }
}

/// Radial rate `d log r/dt` without the `-delta` term.
pub fn radial_field(mode: usize, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    if mode == 0 {
        s * c
    } else {
        -s * c
    }
}

/// Stationary angular densities of the switched angle process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularDensity {
    pub eps: f64,
    /// Cell centres `2 pi i / N`.
    pub grid: Vec<f64>,
    pub rho0: Vec<f64>,
    pub rho1: Vec<f64>,
}

impl AngularDensity {
    pub fn cell_width(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.grid.len() as f64
    }

    pub fn total_mass(&self) -> f64 {
        let h = self.cell_width();
        self.rho0.iter().zip(&self.rho1).map(|(a, b)| (a + b) * h).sum()
    }

    /// `int (rho0 - rho1) cos sin`, periodic trapezoid on the cell centres.
    pub fn threshold(&self) -> f64 {
        let h = self.cell_width();
        self.grid.iter().zip(self.rho0.iter().zip(&self.rho1)).map(|(&t, (a, b))| (a - b) * t.cos() * t.sin() * h).sum()
    }
}

fn solve2(m: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([(b[0] * m[1][1] - m[0][1] * b[1]) / det, (m[0][0] * b[1] - m[1][0] * b[0]) / det])
}

/// Upwind finite volumes on `N` cells with centres at `2 pi i / N`.
///
/// Both angular fields are non-positive, so the flux through the face
/// between cells `i` and `i+1` is `v(face) rho_{i+1}`. Each cell balance
/// `B_i x_i + C_i x_{i+1} = 0` is solved for `x_i` (the downwind direction),
/// giving non-negative transfer matrices; the periodic closure makes `x_0` the
/// Perron vector of their product.
pub fn angular_density(eps: f64, n_cells: usize) -> Result<AngularDensity> {
    check_positive("eps", eps)?;
    if n_cells < 8 || n_cells % 4 != 0 {
        return Err(Error::InvalidInput(format!("n_cells = {n_cells} must be a multiple of 4, at least 8")));
    }
    let n = n_cells;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let r = 1.0 / eps;
    // faces never hit a zero of the fields when 4 | N
    let face = |i: usize| (i as f64 + 0.5) * h;
    let transfer = |i: usize| -> Option<[[f64; 2]; 2]> {
        let (fl, fr) = (face((i + n - 1) % n), face(i));
        let b = [[angular_field(0, fl) / h - r, r], [r, angular_field(1, fl) / h - r]];
        let c = [-angular_field(0, fr) / h, -angular_field(1, fr) / h];
        let col0 = solve2(b, [-c[0], 0.0])?;
        let col1 = solve2(b, [0.0, -c[1]])?;
        Some([[col0[0], col1[0]], [col0[1], col1[1]]])
    };
    let mats: Vec<[[f64; 2]; 2]> = (0..n).map(transfer).collect::<Option<_>>().ok_or(Error::SingularLinearSystem)?;
    // x_0 = T_0 T_1 ... T_{N-1} x_0
    let mut p = [[1.0, 0.0], [0.0, 1.0]];
    for m in &mats {
        let q = [
            [p[0][0] * m[0][0] + p[0][1] * m[1][0], p[0][0] * m[0][1] + p[0][1] * m[1][1]],
            [p[1][0] * m[0][0] + p[1][1] * m[1][0], p[1][0] * m[0][1] + p[1][1] * m[1][1]],
        ];
        let s = q.iter().flatten().fold(0.0f64, |a, &v| a.max(v.abs()));
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::SingularLinearSystem);
        }
        p = q.map(|row| row.map(|v| v / s));
    }
    let tr = p[0][0] + p[1][1];
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let root = 0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt());
    let v = if p[0][1].abs() > 1e-300 {
        [p[0][1], root - p[0][0]]
    } else if p[1][0].abs() > 1e-300 {
        [root - p[1][1], p[1][0]]
    } else {
        return Err(Error::SingularLinearSystem);
    };
    let mut x = vec![[0.0; 2]; n];
    x[0] = v;
    for i in (1..n).rev() {
        let next = x[(i + 1) % n];
        let m = &mats[i];
        x[i] = [m[0][0] * next[0] + m[0][1] * next[1], m[1][0] * next[0] + m[1][1] * next[1]];
        let s = x[i][0].abs().max(x[i][1].abs());
        if s > 1e200 {
            return Err(Error::SingularLinearSystem);
        }
    }
    let mut rho0: Vec<f64> = x.iter().map(|v| v[0]).collect();
    let mut rho1: Vec<f64> = x.iter().map(|v| v[1]).collect();
    if rho0.iter().chain(&rho1).any(|&v| v < 0.0 || !v.is_finite()) {
        // the Perron vector came out with the wrong sign
        if rho0.iter().chain(&rho1).all(|&v| v <= 0.0) {
            rho0.iter_mut().chain(rho1.iter_mut()).for_each(|v| *v = -*v);
        } else {
            return Err(Error::SingularLinearSystem);
        }
    }
    let mass: f64 = rho0.iter().chain(&rho1).sum::<f64>() * h;
    if !(mass > 0.0) {
        return Err(Error::SingularLinearSystem);
    }
    rho0.iter_mut().chain(rho1.iter_mut()).for_each(|v| *v /= mass);
    Ok(AngularDensity { eps, grid: (0..n).map(|i| i as f64 * h).collect(), rho0, rho1 })
}

/// `G(eps)` from the finite-volume stationary density.
pub fn threshold_g(eps: f64, n_cells: usize) -> Result<f64> {
    Ok(angular_density(eps, n_cells)?.threshold())
}

/// Cells used when a single threshold value is needed.
pub const DEFAULT_CELLS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PdlLabel {
    Stable,
    Unstable,
    Boundary,
}

impl PdlLabel {
    /// The property value: 1 stable, 0 unstable.
    pub fn property(self) -> Option<u8> {
        match self {
            PdlLabel::Stable => Some(1),
            PdlLabel::Unstable => Some(0),
            PdlLabel::Boundary => None,
        }
    }
}

pub fn pdl_label(delta: f64, g: f64) -> PdlLabel {
    if (delta - g).abs() < 1e-12 {
        PdlLabel::Boundary
    } else if delta < g {
        PdlLabel::Unstable
    } else {
        PdlLabel::Stable
    }
}

pub fn classify_pdl(eps: f64, delta: f64) -> Result<PdlLabel> {
    check_non_negative("delta", delta)?;
    Ok(pdl_label(delta, threshold_g(eps, DEFAULT_CELLS)?))
}

/// One sampled path: alternating modes with their holding times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPath {
    pub x0: [f64; 2],
    pub mode0: usize,
    pub holds: Vec<f64>,
    pub x_end: [f64; 2],
    /// `log |x_end| - log |x0|`, accumulated with renormalization.
    pub log_growth: f64,
}

/// Simulate with the exact mode flows up to `t_total`.
pub fn simulate_linear(sys: &LinearSwitching, x0: [f64; 2], mode0: usize, t_total: f64, seed: u64, keep_log: bool) -> Result<LinearPath> {
    check_positive("t_total", t_total)?;
    let exp = Exp::new(1.0 / sys.eps).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let (mut x, mut mode, mut t) = (x0, mode0 & 1, 0.0);
    let mut log_growth = 0.0;
    let mut holds = Vec::new();
    let r0 = x0[0].hypot(x0[1]);
    if !(r0 > 0.0) {
        return Err(Error::InvalidInput("x0 must be non-zero".into()));
    }
    let mut scale_ref = r0;
    while t < t_total {
        let hold = exp.sample(&mut rng).min(t_total - t);
        x = sys.flow(mode, hold, x);
        if keep_log {
            holds.push(hold);
        }
        let r = x[0].hypot(x[1]);
        if !(r > 1e-100 && r < 1e100) && keep_log {
            // a replayable log needs the raw state, so stop renormalizing
            return Err(Error::InvalidInput(format!("state norm {r:e} out of range; shorten t_total")));
        }
        if !keep_log {
            log_growth += (r / scale_ref).ln();
            x = [x[0] / r, x[1] / r];
            scale_ref = 1.0;
        }
        t += hold;
        mode ^= 1;
    }
    if keep_log {
        log_growth = (x[0].hypot(x[1]) / r0).ln();
    }
    Ok(LinearPath { x0, mode0, holds, x_end: x, log_growth })
}

/// Apply the recorded holding times again.
pub fn replay_linear(sys: &LinearSwitching, path: &LinearPath) -> [f64; 2] {
    let mut x = path.x0;
    let mut mode = path.mode0 & 1;
    for &h in &path.holds {
        x = sys.flow(mode, h, x);
        mode ^= 1;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialLyap {
    pub lambda: f64,
    pub se: f64,
}

/// Mean of `log |X_T| / T` over independent replicates started at `(1, 0)`
/// in mode 0.
pub fn radial_lyapunov(sys: &LinearSwitching, t_total: f64, n_reps: usize, base_seed: u64) -> Result<RadialLyap> {
    if n_reps < 2 {
        return Err(Error::InvalidInput("need at least two replicates".into()));
    }
    let rates: Vec<f64> = (0..n_reps)
        .into_par_iter()
        .map(|i| simulate_linear(sys, [1.0, 0.0], 0, t_total, derive_seed(base_seed, i as u64), false).map(|p| p.log_growth / t_total))
        .collect::<Result<_>>()?;
    let (lambda, se) = mean_se(&rates);
    Ok(RadialLyap { lambda, se })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices_are_defective() {
        for d in [0i64, 1, 3] {
            assert!(is_defective([[-d, 1], [0, -d]], d));
            assert!(is_defective([[-d, 0], [-1, -d]], d));
            assert!(!is_defective([[-d, 0], [0, -d]], d));
            assert!(!is_defective([[-d, 1], [1, -d]], d));
        }
    }

    #[test]
    fn flow_is_matrix_exponential() {
        // compare against a Taylor series of exp(U t)
        let sys = LinearSwitching::new(0.5, 0.3).unwrap();
        for mode in 0..2 {
            let m = sys.matrix(mode);
            let t = 0.7;
            let x = [0.4, -1.1];
            let mut term = x;
            let mut sum = x;
            for k in 1..40 {
                let nt = [
                    (m[0][0] * term[0] + m[0][1] * term[1]) * t / k as f64,
                    (m[1][0] * term[0] + m[1][1] * term[1]) * t / k as f64,
                ];
                term = nt;
                sum = [sum[0] + nt[0], sum[1] + nt[1]];
            }
            let y = sys.flow(mode, t, x);
            assert!((y[0] - sum[0]).abs() < 1e-14 && (y[1] - sum[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn angular_fields_match_planar_flow() {
        let sys = LinearSwitching::new(1.0, 0.4).unwrap();
        let h = 1e-6;
        for mode in 0..2 {
            for k in 0..24 {
                let th = 0.1 + k as f64 * 0.26;
                let x = [th.cos(), th.sin()];
                let (a, b) = (sys.flow(mode, h, x), sys.flow(mode, -h, x));
                let mut dth = a[1].atan2(a[0]) - b[1].atan2(b[0]);
                if dth > std::f64::consts::PI {
                    dth -= 2.0 * std::f64::consts::PI;
                } else if dth < -std::f64::consts::PI {
                    dth += 2.0 * std::f64::consts::PI;
                }
                assert!((dth / (2.0 * h) - angular_field(mode, th)).abs() < 1e-6, "mode {mode} th {th}");
                let dr = (a[0].hypot(a[1]).ln() - b[0].hypot(b[1]).ln()) / (2.0 * h);
                assert!((dr - (-0.4 + radial_field(mode, th))).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn density_normalized_and_positive() {
        let d = angular_density(0.5, 512).unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-10);
        assert!(d.rho0.iter().chain(&d.rho1).all(|&v| v >= 0.0));
        // the chain spends half its time in each mode
        let h = d.cell_width();
        let m0: f64 = d.rho0.iter().sum::<f64>() * h;
        assert!((m0 - 0.5).abs() < 1e-9, "{m0}");
        assert!(angular_density(0.5, 6).is_err());
    }

    #[test]
    fn threshold_positive_and_decaying() {
        let gs: Vec<f64> = [2.0, 1.0, 0.5, 0.2, 0.1, 0.05].iter().map(|&e| threshold_g(e, 1024).unwrap()).collect();
        assert!(gs.iter().all(|&g| g > 0.0), "{gs:?}");
        assert!(gs[2..].windows(2).all(|w| w[1] < w[0]), "{gs:?}");
    }

    #[test]
    fn labels() {
        assert_eq!(classify_pdl(0.5, 0.0).unwrap(), PdlLabel::Unstable);
        assert_eq!(classify_pdl(0.5, 10.0).unwrap(), PdlLabel::Stable);
        let g = threshold_g(0.5, DEFAULT_CELLS).unwrap();
        assert_eq!(classify_pdl(0.5, g).unwrap(), PdlLabel::Boundary);
        assert!(classify_pdl(0.5, -1.0).is_err());
    }

    #[test]
    fn replay_reproduces_endpoint() {
        let sys = LinearSwitching::new(0.5, 0.1).unwrap();
        for seed in 0..10 {
            let p = simulate_linear(&sys, [0.3, 0.8], 1, 20.0, seed, true).unwrap();
            let y = replay_linear(&sys, &p);
            assert!((y[0] - p.x_end[0]).abs() <= 1e-12 * (1.0 + y[0].abs()));
            assert!((y[1] - p.x_end[1]).abs() <= 1e-12 * (1.0 + y[1].abs()));
        }
    }
}
