use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, Error, Result};
use crate::kernel::quad::integrate;
use crate::kernel::rng_from_seed;

/// `u0 = delta x (1 - x)`, `u1 = x (1 - x/2)`; leave mode 0 at rate `eps`,
/// mode 1 at rate 1.
pub fn logistic_field(mode: usize, delta: f64, x: f64) -> f64 {
    if mode == 0 {
        delta * x * (1.0 - x)
    } else {
        x * (1.0 - 0.5 * x)
    }
}

fn rate_cap(mode: usize, delta: f64) -> (f64, f64) {
    if mode == 0 {
        (delta, 1.0)
    } else {
        (1.0, 2.0)
    }
}

/// Closed-form flow of `r x (1 - x/p)`.
pub fn logistic_flow(mode: usize, delta: f64, t: f64, x: f64) -> f64 {
    let (r, p) = rate_cap(mode, delta);
    if r == 0.0 || t == 0.0 {
        return x;
    }
    p / (1.0 + (p - x) / x * (-r * t).exp())
}

/// Stationary densities on `(1, 2)`,
/// `rho0 = c1 x^(-k-2) (x-1)^(k-1) (2-x)` and `rho1 = c2 x^(-k-2) (x-1)^k`
/// with `k = eps/delta`. Zero total flux gives `c2 = 2 delta c1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticDensities {
    pub eps: f64,
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
}

impl LogisticDensities {
    pub fn exponent(&self) -> f64 {
        self.eps / self.delta
    }

    pub fn rho0(&self, x: f64) -> f64 {
        let k = self.exponent();
        if !(x > 1.0 && x < 2.0) {
            return 0.0;
        }
        self.c1 * x.powf(-k - 2.0) * (x - 1.0).powf(k - 1.0) * (2.0 - x)
    }

    pub fn rho1(&self, x: f64) -> f64 {
        let k = self.exponent();
        if !(x > 1.0 && x < 2.0) {
            return 0.0;
        }
        self.c2 * x.powf(-k - 2.0) * (x - 1.0).powf(k)
    }

    pub fn rho(&self, mode: usize, x: f64) -> f64 {
        if mode == 0 {
            self.rho0(x)
        } else {
            self.rho1(x)
        }
    }

    /// `int_a^b rho_mode` for `1 <= a < b <= 2`.
    pub fn mass_between(&self, mode: usize, a: f64, b: f64) -> Result<f64> {
        let c = if mode == 0 { self.c1 } else { self.c2 };
        Ok(c * shape_integral(mode, self.exponent(), a, b)?)
    }

    pub fn mass(&self, mode: usize) -> Result<f64> {
        self.mass_between(mode, 1.0, 2.0)
    }

    /// `rho0` stays bounded at `x = 1` iff the exponent `k - 1` is non-negative.
    pub fn is_rho0_bounded(&self) -> bool {
        self.exponent() >= 1.0
    }
}

/// `int_a^b x^(-k-2) (x-1)^(k-1) (2-x)` (mode 0) or `x^(-k-2) (x-1)^k`
/// (mode 1), substituting `x = 1 + s^m`, `m = max(1, 1/k)`, which removes the
/// endpoint singularity.
fn shape_integral(mode: usize, k: f64, a: f64, b: f64) -> Result<f64> {
    if !(1.0 <= a && a < b && b <= 2.0) {
        return Err(Error::InvalidInput(format!("need 1 <= a < b <= 2, got [{a}, {b}]")));
    }
    let m = if k < 1.0 { 1.0 / k } else { 1.0 };
    let (sa, sb) = ((a - 1.0).powf(1.0 / m), (b - 1.0).powf(1.0 / m));
    let f = |s: f64| -> f64 {
        if s <= 0.0 {
            // limit of the substituted integrand
            return if mode == 0 && k <= 1.0 { m } else { 0.0 };
        }
        let u = s.powf(m);
        let x = 1.0 + u;
        let jac = m * s.powf(m - 1.0);
        let g = if mode == 0 {
            // with m k = 1, (x-1)^(k-1) dx = m ds
            if k < 1.0 {
                m * (2.0 - x)
            } else {
                u.powf(k - 1.0) * (2.0 - x) * jac
            }
        } else if k < 1.0 {
            m * s.powf(m)
        } else {
            u.powf(k) * jac
        };
        x.powf(-k - 2.0) * g
    };
    let r = integrate(f, sa, sb, 1e-14, 1e-12).map_err(|e| Error::NormalizationFailure(format!("{e:?}")))?;
    if !r.value.is_finite() {
        return Err(Error::NormalizationFailure("non-finite integral".into()));
    }
    Ok(r.value)
}

/// Normalization by total mass 1 and the flux identity `rho0 u0 = -rho1 u1`.
pub fn logistic_densities(eps: f64, delta: f64) -> Result<LogisticDensities> {
    check_positive("eps", eps)?;
    check_positive("delta", delta)?;
    let k = eps / delta;
    let i0 = shape_integral(0, k, 1.0, 2.0)?;
    let i1 = shape_integral(1, k, 1.0, 2.0)?;
    let total = i0 + 2.0 * delta * i1;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::NormalizationFailure(format!("total shape mass {total}")));
    }
    let c1 = 1.0 / total;
    Ok(LogisticDensities { eps, delta, c1, c2: 2.0 * delta * c1 })
}

/// Stationary law including the degenerate axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LogisticStationary {
    Density(LogisticDensities),
    /// Point mass at `x` with mode weights.
    Dirac { x: f64, weights: (f64, f64) },
    /// `eps = delta = 0`: every point mass `delta_x x (1, 0)` is stationary.
    DiracFamily,
}

pub fn logistic_stationary(eps: f64, delta: f64) -> Result<LogisticStationary> {
    check_non_negative("eps", eps)?;
    check_non_negative("delta", delta)?;
    Ok(match (eps > 0.0, delta > 0.0) {
        (true, true) => LogisticStationary::Density(logistic_densities(eps, delta)?),
        (false, true) => LogisticStationary::Dirac { x: 1.0, weights: (1.0, 0.0) },
        (true, false) => LogisticStationary::Dirac { x: 2.0, weights: (1.0 / (1.0 + eps), eps / (1.0 + eps)) },
        (false, false) => LogisticStationary::DiracFamily,
    })
}

/// 1 if `rho0` is bounded (`delta <= eps`), 0 otherwise; `None` on the axes
/// where there is no density.
pub fn classify_bdd(eps: f64, delta: f64) -> Option<u8> {
    if !(eps > 0.0 && delta > 0.0) {
        return None;
    }
    Some((delta <= eps) as u8)
}

/// Jump log of an exactly integrated logistic switching path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticPath {
    pub eps: f64,
    pub delta: f64,
    pub x0: f64,
    pub mode0: usize,
    /// Holding times of the alternating modes; the last one is truncated at `t_end`.
    pub holds: Vec<f64>,
    pub t_end: f64,
}

impl LogisticPath {
    /// `(mode, start state, duration)` for every piece.
    pub fn segments(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let mut x = self.x0;
        let mut mode = self.mode0 & 1;
        self.holds.iter().map(move |&h| {
            let out = (mode, x, h);
            x = logistic_flow(mode, self.delta, h, x);
            mode ^= 1;
            out
        })
    }

    pub fn final_state(&self) -> f64 {
        self.segments().last().map_or(self.x0, |(m, x, h)| logistic_flow(m, self.delta, h, x))
    }
}

pub fn simulate_logistic(eps: f64, delta: f64, x0: f64, mode0: usize, t_end: f64, seed: u64) -> Result<LogisticPath> {
    check_positive("eps", eps)?;
    check_non_negative("delta", delta)?;
    check_positive("t_end", t_end)?;
    check_positive("x0", x0)?;
    let leave = [Exp::new(eps).map_err(|e| Error::InvalidInput(e.to_string()))?, Exp::new(1.0).expect("unit rate")];
    let mut rng = rng_from_seed(seed);
    let (mut t, mut mode) = (0.0, mode0 & 1);
    let mut holds = Vec::new();
    while t < t_end {
        let h = leave[mode].sample(&mut rng).min(t_end - t);
        holds.push(h);
        t += h;
        mode ^= 1;
    }
    Ok(LogisticPath { eps, delta, x0, mode0: mode0 & 1, holds, t_end })
}

/// Time for the flow of `mode` to go from `x` to `y`; infinite if `y` is not
/// ahead of `x` on the way to the stable point.
fn travel_time(mode: usize, delta: f64, x: f64, y: f64) -> f64 {
    let (r, p) = rate_cap(mode, delta);
    let ahead = if x < p { y >= x && y < p } else { y <= x && y > p };
    if !ahead || r == 0.0 {
        return if y == x { 0.0 } else { f64::INFINITY };
    }
    // w = (p - x)/x decays like exp(-r t)
    ((p - x) / x / ((p - y) / y)).ln() / r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Integrates to 1 over `(1, 2)`.
    pub density: Vec<f64>,
    pub time_in_mode: f64,
}

impl Histogram {
    pub fn width(&self, j: usize) -> f64 {
        self.edges[j + 1] - self.edges[j]
    }

    pub fn max(&self) -> f64 {
        self.density.iter().cloned().fold(0.0, f64::max)
    }
}

/// Time-weighted occupation density of `x` while in `mode`, after discarding
/// `burn_in` time units. Each piece contributes exactly the time it spends in
/// every bin.
pub fn occupation_histogram(path: &LogisticPath, mode: usize, bins: usize, burn_in: f64) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidInput("bins must be positive".into()));
    }
    let edges: Vec<f64> = (0..=bins).map(|j| 1.0 + j as f64 / bins as f64).collect();
    let mut time = vec![0.0; bins];
    let mut t = 0.0;
    let bin_of = |x: f64| (((x - 1.0) * bins as f64).floor().max(0.0) as usize).min(bins - 1);
    for (m, x, h) in path.segments() {
        let (mut xs, mut hs) = (x, h);
        if t + h <= burn_in {
            t += h;
            continue;
        }
        if t < burn_in {
            xs = logistic_flow(m, path.delta, burn_in - t, x);
            hs = t + h - burn_in;
        }
        t += h;
        if m != mode || !(1.0..=2.0).contains(&xs) {
            continue;
        }
        let xe = logistic_flow(m, path.delta, hs, xs);
        let (lo, hi) = if xe >= xs { (xs, xe) } else { (xe, xs) };
        let (jl, jh) = (bin_of(lo), bin_of(hi));
        if jl == jh {
            time[jl] += hs;
            continue;
        }
        for j in jl..=jh {
            let (a, b) = (edges[j].max(lo), edges[j + 1].min(hi));
            // entry and exit times of [a, b] along the piece
            let (ta, tb) = (travel_time(m, path.delta, xs, a).min(hs), travel_time(m, path.delta, xs, b).min(hs));
            time[j] += (tb - ta).abs();
        }
    }
    let total: f64 = time.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(format!("path spends no time in mode {mode} after burn-in")));
    }
    let density = time.iter().enumerate().map(|(j, &s)| s / (total * (edges[j + 1] - edges[j]))).collect();
    Ok(Histogram { edges, density, time_in_mode: total })
}

/// L1 distance between a histogram and the bin averages of `rho_mode / mass_mode`.
pub fn histogram_l1(h: &Histogram, dens: &LogisticDensities, mode: usize) -> Result<f64> {
    let mass = dens.mass(mode)?;
    let mut d = 0.0;
    for j in 0..h.density.len() {
        let w = h.width(j);
        let exact = dens.mass_between(mode, h.edges[j], h.edges[j + 1])? / (mass * w);
        d += (h.density[j] - exact).abs() * w;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_solves_logistic_ode() {
        let (delta, x) = (0.4, 1.7);
        for mode in 0..2 {
            let h = 1e-5;
            let t = 0.9;
            let d = (logistic_flow(mode, delta, t + h, x) - logistic_flow(mode, delta, t - h, x)) / (2.0 * h);
            let y = logistic_flow(mode, delta, t, x);
            assert!((d - logistic_field(mode, delta, y)).abs() < 1e-8);
            assert!((travel_time(mode, delta, x, y) - t).abs() < 1e-10);
        }
    }

    #[test]
    fn normalization_and_mode_masses() {
        for (eps, delta) in [(1.0, 0.5), (0.5, 1.0), (0.3, 0.6), (0.05, 2.0), (2.0, 0.1), (0.5, 0.5)] {
            let d = logistic_densities(eps, delta).unwrap();
            let (m0, m1) = (d.mass(0).unwrap(), d.mass(1).unwrap());
            assert!((m0 + m1 - 1.0).abs() < 1e-10, "{eps} {delta}");
            // the mode chain alone spends 1/(1+eps) of the time in mode 0
            assert!((m0 - 1.0 / (1.0 + eps)).abs() < 1e-9, "{eps} {delta}: {m0}");
        }
    }

    #[test]
    fn flux_identity() {
        let d = logistic_densities(0.7, 0.3).unwrap();
        for x in [1.1, 1.4, 1.9] {
            let f0 = d.rho0(x) * logistic_field(0, 0.3, x);
            let f1 = d.rho1(x) * logistic_field(1, 0.3, x);
            assert!((f0 + f1).abs() < 1e-12 * f1.abs().max(1.0));
        }
    }

    #[test]
    fn boundary_behaviour_of_rho0() {
        let at = |eps: f64, delta: f64, x: f64| logistic_densities(eps, delta).unwrap().rho0(x);
        // eps = delta: (x-1)^0, finite limit c1 at x = 1
        let d = logistic_densities(0.4, 0.4).unwrap();
        assert!((at(0.4, 0.4, 1.0 + 1e-12) - d.c1).abs() < 1e-9 * d.c1);
        assert!(at(0.8, 0.4, 1.0 + 1e-8) < 1e-6);
        assert!(at(0.2, 0.4, 1.0 + 1e-8) > 1e3);
        assert!(logistic_densities(0.2, 0.4).unwrap().rho1(1.0 + 1e-8) < 1.0);
    }

    #[test]
    fn bdd_labels() {
        assert_eq!(classify_bdd(0.6, 0.3), Some(1));
        assert_eq!(classify_bdd(0.3, 0.6), Some(0));
        assert_eq!(classify_bdd(0.5, 0.5), Some(1));
        assert_eq!(classify_bdd(0.5, 0.5 * (1.0 + 1e-9)), Some(0));
        assert_eq!(classify_bdd(0.0, 0.5), None);
        assert_eq!(classify_bdd(0.5, 0.0), None);
    }

    #[test]
    fn degenerate_axes() {
        assert_eq!(logistic_stationary(0.0, 0.5).unwrap(), LogisticStationary::Dirac { x: 1.0, weights: (1.0, 0.0) });
        match logistic_stationary(0.25, 0.0).unwrap() {
            LogisticStationary::Dirac { x, weights } => {
                assert_eq!(x, 2.0);
                assert!((weights.0 - 0.8).abs() < 1e-15 && (weights.1 - 0.2).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(logistic_stationary(0.0, 0.0).unwrap(), LogisticStationary::DiracFamily);
    }

    #[test]
    fn interval_is_invariant() {
        for seed in 0..100 {
            let p = simulate_logistic(0.5, 1.0, 1.5, (seed % 2) as usize, 50.0, seed).unwrap();
            assert!(p.segments().all(|(_, x, _)| (1.0..=2.0).contains(&x)));
            assert!((1.0..=2.0).contains(&p.final_state()));
        }
    }

    #[test]
    fn short_histogram_matches() {
        let p = simulate_logistic(1.0, 0.5, 1.5, 0, 2e4, 3).unwrap();
        let d = logistic_densities(1.0, 0.5).unwrap();
        let h = occupation_histogram(&p, 0, 20, 10.0).unwrap();
        let s: f64 = (0..20).map(|j| h.density[j] * h.width(j)).sum();
        assert!((s - 1.0).abs() < 1e-10);
        assert!(histogram_l1(&h, &d, 0).unwrap() < 0.1);
    }
}
