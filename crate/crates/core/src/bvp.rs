//! The regularized membrane problem
//! `u'' = lambda/(1+u)^2 [1 - eps^2/(1+u)^2]` on `[-1, 1]`, `u(-1) = u(1) = 0`.
//!
//! Even solutions are found by shooting from the centre with `u'(0) = 0` and
//! integrating to the boundary. The ODE is autonomous, so the first
//! integral also gives `lambda` as an explicit quadrature in `u(0)`; that
//! route is kept separate and used as an oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, Error, Result};
use crate::kernel::quad::integrate;
use crate::kernel::{Control, OdeOptions, OdeSolver};

/// Guard on `1 + u` when `eps = 0`.
pub const EPS_ZERO_GUARD: f64 = 1e-6;
/// Upper end of the `eps` interval on which regime I is asserted.
pub const EPS0: f64 = 0.25;
const NEWTON_TOL: f64 = 1e-10;
const PROFILE_POINTS: usize = 401;

fn guard(eps: f64) -> f64 {
    if eps > 0.0 {
        0.5 * eps
    } else {
        EPS_ZERO_GUARD
    }
}

/// Right-hand side `F(u)`.
pub fn mems_force(lambda: f64, eps: f64, u: f64) -> f64 {
    let w = 1.0 + u;
    let w2 = w * w;
    lambda / w2 * (1.0 - eps * eps / w2)
}

fn mems_force_du(lambda: f64, eps: f64, u: f64) -> f64 {
    let w = 1.0 + u;
    let w3 = w * w * w;
    lambda * (-2.0 / w3 + 4.0 * eps * eps / (w3 * w * w))
}

/// Potential with `V' = F`.
pub fn mems_potential(lambda: f64, eps: f64, u: f64) -> f64 {
    let w = 1.0 + u;
    lambda * (-1.0 / w + eps * eps / (3.0 * w * w * w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchTag {
    Lower,
    Middle,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemsSolution {
    pub lambda: f64,
    pub eps: f64,
    pub u0: f64,
    /// Sample points on `[-1, 1]`.
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub norm_sq: f64,
    pub branch_tag: BranchTag,
    /// `|u(+-1)|` at convergence.
    pub residual: f64,
}

impl MemsSolution {
    pub fn min_u(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest deviation of `u'^2/2 - V(u) + V(u(0))` from zero on the grid.
    /// This uses only the sampled profile, not the shooting residual.
    pub fn first_integral_defect(&self) -> f64 {
        let v0 = mems_potential(self.lambda, self.eps, self.u0);
        self.u
            .iter()
            .zip(&self.du)
            .map(|(&u, &d)| (0.5 * d * d - mems_potential(self.lambda, self.eps, u) + v0).abs())
            .fold(0.0, f64::max)
    }
}

struct Shot {
    residual: f64,
    d_u0: f64,
    d_lambda: f64,
    solver_traj: Option<(Vec<f64>, Vec<[f64; 3]>)>,
}

/// Integrate from the centre to the boundary. The state carries the
/// variations with respect to `u0` and `lambda` and the running `int u^2`.
fn shoot(lambda: f64, eps: f64, u0: f64, keep: bool) -> Result<Shot> {
    let g = guard(eps);
    if !(1.0 + u0 > g) {
        return Err(Error::SingularityHit { gap: 1.0 + u0 });
    }
    let f = move |_: f64, y: &[f64], d: &mut [f64]| {
        let fu = mems_force(lambda, eps, y[0]);
        let fp = mems_force_du(lambda, eps, y[0]);
        d[0] = y[1];
        d[1] = fu;
        d[2] = y[3];
        d[3] = fp * y[2];
        d[4] = y[5];
        d[5] = fp * y[4] + fu / lambda;
        d[6] = y[0] * y[0];
    };
    let mut solver = OdeSolver::new(7, OdeOptions::tol(1e-12, 1e-13).max_step(0.02))?;
    let mut gap = f64::INFINITY;
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    let (t_end, y) = solver.drive(&f, 0.0, &[u0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], 1.0, |t, y, _| {
        gap = gap.min(1.0 + y[0]);
        if keep {
            ts.push(t);
            xs.push([y[0], y[1], y[6]]);
        }
        if 1.0 + y[0] <= g {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    if t_end < 1.0 || gap <= g {
        return Err(Error::SingularityHit { gap });
    }
    Ok(Shot { residual: y[0], d_u0: y[2], d_lambda: y[4], solver_traj: keep.then_some((ts, xs)) })
}

/// Newton in `u0` on the boundary residual.
pub fn mems_shoot(lambda: f64, eps: f64, u0_guess: f64) -> Result<MemsSolution> {
    check_positive("lambda", lambda)?;
    check_non_negative("eps", eps)?;
    let lo = -1.0 + guard(eps);
    let mut u0 = u0_guess;
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let s = match shoot(lambda, eps, u0, false) {
            Ok(s) => s,
            Err(Error::SingularityHit { .. }) if u0 < 0.0 => {
                // the trial overshot towards the singular set; back off
                u0 = 0.5 * u0;
                continue;
            }
            Err(e) => return Err(e),
        };
        last = s.residual.abs();
        if last < NEWTON_TOL {
            return build_solution(lambda, eps, u0);
        }
        if !(s.d_u0.abs() > 0.0) || !s.d_u0.is_finite() {
            return Err(Error::NewtonDiverged { residual: last });
        }
        let mut next = u0 - s.residual / s.d_u0;
        if next <= lo {
            next = 0.5 * (u0 + lo);
        }
        if next >= 0.0 {
            next = 0.5 * u0;
        }
        u0 = next;
    }
    Err(Error::NewtonDiverged { residual: last })
}

fn build_solution(lambda: f64, eps: f64, u0: f64) -> Result<MemsSolution> {
    let s = shoot(lambda, eps, u0, true)?;
    let (ts, ys) = s.solver_traj.expect("kept");
    // linear interpolation would lose accuracy; the grid is resampled with
    // Hermite cubics using u' as the derivative of u and F(u) for u'
    let half: Vec<(f64, f64, f64)> = (0..=(PROFILE_POINTS / 2))
        .map(|i| {
            let t = i as f64 / (PROFILE_POINTS / 2) as f64;
            let k = ts.partition_point(|&s| s <= t).clamp(1, ts.len() - 1);
            let (t0, t1) = (ts[k - 1], ts[k]);
            let (a, b) = (ys[k - 1], ys[k]);
            let h = t1 - t0;
            let th = if h > 0.0 { (t - t0) / h } else { 0.0 };
            let herm = |p0: f64, m0: f64, p1: f64, m1: f64| {
                let (t2, t3) = (th * th, th * th * th);
                (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + th) * h * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * h * m1
            };
            let u = herm(a[0], a[1], b[0], b[1]);
            let du = herm(a[1], mems_force(lambda, eps, a[0]), b[1], mems_force(lambda, eps, b[0]));
            (t, u, du)
        })
        .collect();
    let mut x = Vec::with_capacity(PROFILE_POINTS);
    let mut u = Vec::with_capacity(PROFILE_POINTS);
    let mut du = Vec::with_capacity(PROFILE_POINTS);
    for &(t, v, d) in half.iter().rev() {
        x.push(-t);
        u.push(v);
        du.push(-d);
    }
    for &(t, v, d) in half.iter().skip(1) {
        x.push(t);
        u.push(v);
        du.push(d);
    }
    let norm_sq = 2.0 * ys.last().map_or(0.0, |y| y[2]);
    Ok(MemsSolution { lambda, eps, u0, x, u, du, norm_sq, branch_tag: branch_tag_for(eps, u0), residual: s.residual.abs() })
}

/// `lambda(u0)` from the first integral: `1 = int_{u0}^0 du / sqrt(2 (V(u) -
/// V(u0)))`, with `V` proportional to `lambda`. The substitution
/// `u = u0 + t^2` removes the endpoint singularity.
pub fn mems_lambda_of_u0(eps: f64, u0: f64) -> Result<f64> {
    check_non_negative("eps", eps)?;
    let w0 = 1.0 + u0;
    if !(w0 > eps && u0 < 0.0) {
        return Err(Error::InvalidInput(format!("u0 = {u0} must lie in (-1 + eps, 0)")));
    }
    let e2 = eps * eps;
    // (v(w) - v(w0)) / (w - w0) for v = -1/w + eps^2/(3 w^3)
    let b = |w: f64| 1.0 / (w * w0) - e2 * (w * w + w * w0 + w0 * w0) / (3.0 * w * w * w * w0 * w0 * w0);
    let r = integrate(|t: f64| (2.0 / b(w0 + t * t)).sqrt(), 0.0, (-u0).sqrt(), 1e-14, 1e-12)?;
    Ok(r.value * r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldPoint {
    pub lambda: f64,
    pub u0: f64,
}

/// Turning points of `lambda(u0)` from the quadrature route: the upper fold
/// `lambda^*` between the lower and middle branches and, for `eps > 0`, the
/// fold `lambda_*(eps)` where the middle and upper branches meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemsFolds {
    pub lower_middle: FoldPoint,
    pub middle_upper: Option<FoldPoint>,
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let s = if maximize { -1.0 } else { 1.0 };
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (s * f(c), s * f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-11 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = s * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = s * f(d);
        }
    }
    0.5 * (a + b)
}

pub fn mems_folds(eps: f64) -> Result<MemsFolds> {
    check_non_negative("eps", eps)?;
    let lo = -1.0 + eps.max(EPS_ZERO_GUARD);
    let n = 400;
    // log-spaced in the gap to -1 + eps, where the features sit
    let span = -lo;
    let grid: Vec<f64> = (1..n).map(|i| lo + span * (1e-6f64).powf(1.0 - i as f64 / n as f64)).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| mems_lambda_of_u0(eps, u)).collect::<Result<_>>()?;
    let lam = |u: f64| mems_lambda_of_u0(eps, u).unwrap_or(f64::NAN);
    let mut lm = None;
    let mut mu = None;
    for i in 1..vals.len() - 1 {
        let (a, b, c) = (vals[i - 1], vals[i], vals[i + 1]);
        if b > a && b >= c {
            let u = golden(lam, grid[i - 1], grid[i + 1], true);
            lm = Some(FoldPoint { lambda: lam(u), u0: u });
        } else if b < a && b <= c && eps > 0.0 {
            let u = golden(lam, grid[i - 1], grid[i + 1], false);
            mu = Some(FoldPoint { lambda: lam(u), u0: u });
        }
    }
    let lower_middle = lm.ok_or_else(|| Error::Degenerate("no maximum of lambda(u0)".into()))?;
    Ok(MemsFolds { lower_middle, middle_upper: mu })
}

/// Branch from the position of `u0` relative to the folds.
pub fn branch_tag_for(eps: f64, u0: f64) -> BranchTag {
    match mems_folds(eps) {
        Ok(f) if u0 >= f.lower_middle.u0 => BranchTag::Lower,
        Ok(MemsFolds { middle_upper: Some(m), .. }) if u0 < m.u0 => BranchTag::Upper,
        _ => BranchTag::Middle,
    }
}

/// Distinct solutions at `lambda` from `n_starts` shooting residual samples
/// on `(-1 + eps, 0)`; each sign change is polished by Newton.
pub fn mems_solutions(lambda: f64, eps: f64, n_starts: usize) -> Result<Vec<MemsSolution>> {
    check_positive("lambda", lambda)?;
    if n_starts < 4 {
        return Err(Error::InvalidInput("need at least 4 starts".into()));
    }
    // half the starts uniform, half clustered at -1 + eps where the upper
    // branch lives
    let base = -1.0 + eps.max(EPS_ZERO_GUARD);
    let half = n_starts / 2;
    let mut starts: Vec<f64> = (1..half).map(|i| -(i as f64) / half as f64).collect();
    starts.extend((0..half).map(|i| base + (-base) * (1e-9f64).powf(1.0 - i as f64 / half as f64) * 0.5));
    starts.push(-1e-12);
    starts.retain(|&u| u > base && u < 0.0);
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    starts.dedup();
    let res: Vec<Option<f64>> = starts.par_iter().map(|&u| shoot(lambda, eps, u, false).ok().map(|s| s.residual)).collect();
    let mut found: Vec<MemsSolution> = Vec::new();
    for i in 1..starts.len() {
        if let (Some(a), Some(b)) = (res[i - 1], res[i]) {
            if a.signum() != b.signum() {
                // secant guess then Newton
                let guess = starts[i - 1] - a * (starts[i] - starts[i - 1]) / (b - a);
                if let Ok(s) = mems_shoot(lambda, eps, guess) {
                    if !found.iter().any(|f| (f.u0 - s.u0).abs() < 1e-7) {
                        found.push(s);
                    }
                }
            }
        }
    }
    found.sort_by(|a, b| b.u0.partial_cmp(&a.u0).unwrap());
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FoldKind {
    /// Maximum of `lambda`: lower meets middle.
    LowerMiddle,
    /// Minimum of `lambda`: middle meets upper.
    MiddleUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchFold {
    pub lambda: f64,
    pub u0: f64,
    pub kind: FoldKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemsBranch {
    pub points: Vec<MemsSolution>,
    /// Turning points in `lambda`, located by golden-section search.
    pub folds: Vec<BranchFold>,
    /// Indices into `points` just after each fold.
    pub fold_index: Vec<usize>,
    /// Continuation ended on approach to the singular set `1 + u = eps`.
    pub hit_singular: bool,
}

impl MemsBranch {
    pub fn folds_of(&self, kind: FoldKind) -> Vec<BranchFold> {
        self.folds.iter().filter(|f| f.kind == kind).copied().collect()
    }
}

/// Pseudo-arclength continuation in `(lambda, u0)` from a converged lower
/// solution at `lambda_start`. `direction` is the initial sign of
/// `d lambda / ds`.
pub fn mems_branch(eps: f64, lambda_start: f64, direction: f64, n_steps: usize) -> Result<MemsBranch> {
    let start = mems_shoot(lambda_start, eps, -0.5 * lambda_start)?;
    mems_branch_from(&start, direction, n_steps, 0.02)
}

pub fn mems_branch_from(start: &MemsSolution, direction: f64, n_steps: usize, ds0: f64) -> Result<MemsBranch> {
    let eps = start.eps;
    let (mut lam, mut u0) = (start.lambda, start.u0);
    let s = shoot(lam, eps, u0, false)?;
    // tangent orthogonal to the residual gradient
    let tangent = |s: &Shot| {
        let (a, b) = (s.d_u0, -s.d_lambda);
        let n = a.hypot(b);
        (a / n, b / n)
    };
    let (mut tl, mut tu) = tangent(&s);
    if tl * direction < 0.0 {
        tl = -tl;
        tu = -tu;
    }
    let mut ds = ds0;
    let mut points = vec![start.clone()];
    let mut folds = Vec::new();
    let mut fold_index = Vec::new();
    let mut hit_singular = false;
    let mut prev_tl = tl;
    let mut history: Vec<(f64, f64)> = vec![(lam, u0)];
    let mut step = 0;
    while step < n_steps {
        if ds < 1e-9 {
            // next to 1 + u = eps one ulp in u0 moves the boundary value by
            // more than the tolerance: the end of what shooting can resolve
            if 1.0 + u0 - eps.max(EPS_ZERO_GUARD) < 1e-3 * eps.max(EPS_ZERO_GUARD) {
                hit_singular = true;
                break;
            }
            return Err(Error::ContinuationStalled { lambda: lam });
        }
        let (mut l, mut u) = (lam + ds * tl, u0 + ds * tu);
        let mut ok = false;
        let mut singular = false;
        for _ in 0..20 {
            if !(l > 0.0) {
                break;
            }
            let sh = match shoot(l, eps, u, false) {
                Ok(sh) => sh,
                Err(Error::SingularityHit { .. }) => {
                    singular = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            // residual and arclength constraint
            let r1 = sh.residual;
            let r2 = tl * (l - lam) + tu * (u - u0) - ds;
            if r1.abs() < NEWTON_TOL && r2.abs() < 1e-12 {
                ok = true;
                break;
            }
            let (a, b, c, d) = (sh.d_lambda, sh.d_u0, tl, tu);
            let det = a * d - b * c;
            if det == 0.0 || !det.is_finite() {
                break;
            }
            l -= (d * r1 - b * r2) / det;
            u -= (-c * r1 + a * r2) / det;
        }
        if !ok {
            if singular && ds < 1e-4 {
                hit_singular = true;
                break;
            }
            ds *= 0.5;
            continue;
        }
        let sh = shoot(l, eps, u, false)?;
        let (mut nl, mut nu) = tangent(&sh);
        if nl * tl + nu * tu < 0.0 {
            nl = -nl;
            nu = -nu;
        }
        history.push((l, u));
        let sol = build_solution(l, eps, u)?;
        points.push(sol);
        if nl * prev_tl < 0.0 {
            let k = history.len();
            let rough = if k >= 3 { parabola_extremum(&history[k - 3..]) } else { FoldPoint { lambda: l, u0: u } };
            let fold = if k >= 3 { refine_fold(eps, &history[k - 3..], nl > 0.0).unwrap_or(rough) } else { rough };
            let kind = if nl > 0.0 { FoldKind::MiddleUpper } else { FoldKind::LowerMiddle };
            folds.push(BranchFold { lambda: fold.lambda, u0: fold.u0, kind });
            fold_index.push(points.len() - 1);
        }
        prev_tl = nl;
        lam = l;
        u0 = u;
        tl = nl;
        tu = nu;
        ds = (ds * 1.3).min(ds0);
        step += 1;
    }
    Ok(MemsBranch { points, folds, fold_index, hit_singular })
}

/// `lambda` with `u(1) = 0` at fixed `u0`, by Newton in `lambda`.
pub fn mems_lambda_by_shooting(eps: f64, u0: f64, lambda_guess: f64) -> Result<f64> {
    let mut l = lambda_guess;
    let mut last = f64::INFINITY;
    for _ in 0..40 {
        let s = shoot(l, eps, u0, false)?;
        last = s.residual.abs();
        if last < NEWTON_TOL {
            return Ok(l);
        }
        let next = l - s.residual / s.d_lambda;
        l = if next > 0.0 { next } else { 0.5 * l };
    }
    Err(Error::NewtonDiverged { residual: last })
}

/// Golden-section search for the turning point between the outer two of
/// three branch points, with `lambda(u0)` evaluated by shooting.
fn refine_fold(eps: f64, p: &[(f64, f64)], minimum: bool) -> Option<FoldPoint> {
    let (a, b) = (p[0].1.min(p[2].1), p[0].1.max(p[2].1));
    let guess = p[1].0;
    let lam = |u: f64| mems_lambda_by_shooting(eps, u, guess).unwrap_or(f64::NAN);
    let u = golden(lam, a, b, !minimum);
    let l = mems_lambda_by_shooting(eps, u, guess).ok()?;
    Some(FoldPoint { lambda: l, u0: u })
}

/// Extremum of `lambda` on the parabola through three `(lambda, u0)` points,
/// parameterized by `u0`.
fn parabola_extremum(p: &[(f64, f64)]) -> FoldPoint {
    let (l0, u0) = p[0];
    let (l1, u1) = p[1];
    let (l2, u2) = p[2];
    let d01 = (l1 - l0) / (u1 - u0);
    let d12 = (l2 - l1) / (u2 - u1);
    let a = (d12 - d01) / (u2 - u0);
    let b = d01 - a * (u0 + u1);
    if a == 0.0 || !a.is_finite() {
        return FoldPoint { lambda: l1, u0: u1 };
    }
    let u = -b / (2.0 * a);
    let c = l0 - a * u0 * u0 - b * u0;
    FoldPoint { lambda: a * u * u + b * u + c, u0: u }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SsRegime {
    I,
    II,
    III,
    IV,
}

/// `lambda = eps / delta^2`.
pub fn mems_delta(eps: f64, lambda: f64) -> f64 {
    (eps / lambda).sqrt()
}

/// Regime of singular solutions in the `(eps, delta)` plane. `None` where
/// the partition says nothing: `eps >= eps0` inside the delta band, and the
/// single point `eps = 0, delta = 2/sqrt 3`.
pub fn classify_ss(eps: f64, delta: f64) -> Option<SsRegime> {
    classify_ss_with(eps, delta, EPS0)
}

pub fn classify_ss_with(eps: f64, delta: f64, eps0: f64) -> Option<SsRegime> {
    if !(eps >= 0.0 && delta >= 0.0) {
        return None;
    }
    let top = 2.0 / 3f64.sqrt();
    if eps == 0.0 {
        return if delta == 0.0 {
            Some(SsRegime::III)
        } else if delta < top {
            Some(SsRegime::II)
        } else if delta > top {
            Some(SsRegime::IV)
        } else {
            None
        };
    }
    if delta > top || delta < eps.sqrt() {
        return Some(SsRegime::IV);
    }
    if eps < eps0 {
        Some(SsRegime::I)
    } else {
        None
    }
}
