//! Passage through the transcritical point of `x' = x^2 - y^2 + eps^2/delta`,
//! `y' = eps`, started on the attracting branch at `(-3, -3)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::kernel::{integrate_ode_with, Control, EventSection, OdeOptions, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TcLabel {
    ExchangeOfStability,
    CriticalTransition,
    Canard,
}

/// Axis-aligned state box `[x_lo, x_hi] x [y_lo, y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Default for StateBox {
    fn default() -> Self {
        Self { x: (-4.0, 4.0), y: (-4.0, 4.0) }
    }
}

impl StateBox {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x.0 && x <= self.x.1 && y >= self.y.0 && y <= self.y.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcConfig {
    /// Canard tube half-width in units of `eps`.
    pub tube_factor: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for TcConfig {
    fn default() -> Self {
        Self { tube_factor: 3.0, rel_tol: 1e-11, abs_tol: 1e-12 }
    }
}

pub const TC_START: [f64; 2] = [-3.0, -3.0];

/// Smallest `eps` accepted by the command-line sweeps; below it the wedge
/// around `delta = eps` is thinner than double precision resolves.
pub const TC_EPS_FLOOR: f64 = 0.02;

pub fn tc_field(eps: f64, delta: f64) -> impl Fn(f64, &[f64], &mut [f64]) {
    let c = eps * eps / delta;
    move |_, z, d| {
        d[0] = z[0] * z[0] - z[1] * z[1] + c;
        d[1] = eps;
    }
}

/// Trajectory from [`TC_START`] until it leaves the box, passes `y = 1` inside
/// the canard tube, or moves beyond either section level.
pub fn tc_trajectory(eps: f64, delta: f64, bbox: &StateBox, cfg: &TcConfig) -> Result<Trajectory<f64>> {
    check_positive("eps", eps)?;
    check_positive("delta", delta)?;
    if eps > 0.3 {
        return Err(Error::InvalidInput(format!("eps = {eps} exceeds 0.3")));
    }
    let t_end = (bbox.y.1 - TC_START[1]) / eps * 1.05;
    let opts = OdeOptions::tol(cfg.rel_tol, cfg.abs_tol).max_step(0.05 / eps.sqrt());
    let tube = cfg.tube_factor * eps;
    let traj = integrate_ode_with(tc_field(eps, delta), &TC_START, (0.0, t_end), &opts, |_, z| {
        let (x, y) = (z[0], z[1]);
        let canard = y > 1.0 && x > 0.0 && (x - y).abs() < tube;
        if !bbox.contains(x, y) || canard || (x > 2.0 && y >= -1.0) || (x < -2.0 && y >= 1.0) {
            Control::Stop
        } else {
            Control::Continue
        }
    });
    match traj {
        Err(e) if e.is_non_finite() => Err(Error::Ambiguous),
        other => Ok(other?),
    }
}

fn label_from(traj: &Trajectory<f64>, eps: f64, bbox: &StateBox, cfg: &TcConfig) -> Result<TcLabel> {
    let minus = EventSection::new(0, -2.0)?.window(1, 1.0, 3.0)?;
    let plus = EventSection::new(0, 2.0)?.window(1, -1.0, 1.0)?;
    let cm = minus.first_crossing(traj).map(|c| c.t);
    let cp = plus.first_crossing(traj).map(|c| c.t);
    match (cm, cp) {
        (Some(a), Some(b)) => {
            return Ok(if a <= b { TcLabel::ExchangeOfStability } else { TcLabel::CriticalTransition });
        }
        (Some(_), None) => return Ok(TcLabel::ExchangeOfStability),
        (None, Some(_)) => return Ok(TcLabel::CriticalTransition),
        _ => {}
    }
    let (_, z) = traj.last().ok_or(Error::Ambiguous)?;
    let (x, y) = (z[0], z[1]);
    let in_tube = x > 0.0 && y > 0.0 && (x - y).abs() < cfg.tube_factor * eps;
    if in_tube && (y > 1.0 || !bbox.contains(x, y)) {
        Ok(TcLabel::Canard)
    } else {
        Err(Error::Ambiguous)
    }
}

/// Case label for one `(eps, delta)`.
pub fn classify_transcritical(eps: f64, delta: f64, bbox: &StateBox, cfg: &TcConfig) -> Result<TcLabel> {
    let traj = tc_trajectory(eps, delta, bbox, cfg)?;
    label_from(&traj, eps, bbox, cfg)
}

/// The band of `delta` around `eps` separating the two jump cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipInterval {
    /// Largest `delta` found with a critical transition.
    pub lo: f64,
    /// Smallest `delta` found with exchange of stability.
    pub hi: f64,
    /// Labels met strictly inside, in increasing `delta`.
    pub canard_inside: bool,
}

impl FlipInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn bisect_edge(
    eps: f64,
    mut a: f64,
    mut b: f64,
    is_a: impl Fn(TcLabel) -> bool,
    bbox: &StateBox,
    cfg: &TcConfig,
) -> Result<(f64, f64)> {
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * b {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        match classify_transcritical(eps, m, bbox, cfg) {
            Ok(l) if is_a(l) => a = m,
            Ok(_) | Err(Error::Ambiguous) => b = m,
            Err(e) => return Err(e),
        }
    }
    Ok((a, b))
}

/// Locate the flip band by bisection from `eps(1 -+ sqrt(eps))` towards
/// `delta = eps`. Each side must carry its expected label.
pub fn tc_flip_interval(eps: f64, bbox: &StateBox, cfg: &TcConfig) -> Result<FlipInterval> {
    let lo0 = eps * (1.0 - eps.sqrt());
    let hi0 = eps * (1.0 + eps.sqrt());
    if classify_transcritical(eps, lo0, bbox, cfg)? != TcLabel::CriticalTransition
        || classify_transcritical(eps, hi0, bbox, cfg)? != TcLabel::ExchangeOfStability
    {
        return Err(Error::BracketingFailure { lo: lo0, hi: hi0 });
    }
    let mid = classify_transcritical(eps, eps, bbox, cfg);
    let canard_inside = matches!(mid, Ok(TcLabel::Canard));
    let (lo, _) = bisect_edge(eps, lo0, eps, |l| l == TcLabel::CriticalTransition, bbox, cfg)?;
    let (_, hi) = bisect_edge(eps, eps, hi0, |l| l != TcLabel::ExchangeOfStability, bbox, cfg)?;
    Ok(FlipInterval { lo, hi, canard_inside })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(eps: f64, delta: f64) -> TcLabel {
        classify_transcritical(eps, delta, &StateBox::default(), &TcConfig::default()).unwrap()
    }

    #[test]
    fn three_cases_at_tenth() {
        let e: f64 = 0.1;
        assert_eq!(label(e, e * (1.0 + e.sqrt())), TcLabel::ExchangeOfStability);
        assert_eq!(label(e, e * (1.0 - e.sqrt())), TcLabel::CriticalTransition);
        assert_eq!(label(e, e), TcLabel::Canard);
    }

    #[test]
    fn diagonal_is_invariant_line() {
        // x = y solves the system exactly when delta = eps
        let traj = tc_trajectory(0.1, 0.1, &StateBox::default(), &TcConfig::default()).unwrap();
        for (_, z) in traj.iter().filter(|(_, z)| z[1] < 0.5) {
            assert!((z[0] - z[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn attraction_to_lower_branch() {
        for &(e, k) in &[(0.1, 1.2), (0.05, 0.8), (0.2, 1.1)] {
            let traj = tc_trajectory(e, k * e, &StateBox::default(), &TcConfig::default()).unwrap();
            let (_, z) = traj.iter().find(|(_, z)| z[1] >= -1.0).unwrap();
            assert!((z[0] - z[1]).abs() < 5.0 * e, "eps {e}: {z:?}");
        }
    }

    #[test]
    fn rejects_large_eps() {
        assert!(classify_transcritical(0.5, 0.5, &StateBox::default(), &TcConfig::default()).is_err());
    }

    #[test]
    fn wedge_shrinks() {
        let w: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| tc_flip_interval(e, &StateBox::default(), &TcConfig::default()).unwrap().width())
            .collect();
        assert!(w[0] > w[1] && w[1] > w[2], "{w:?}");
    }

    #[test]
    fn single_flip_along_delta() {
        let e: f64 = 0.1;
        let labels: Vec<TcLabel> = (0..=40)
            .map(|i| label(e, e * (1.0 - e.sqrt() + 2.0 * e.sqrt() * i as f64 / 40.0)))
            .filter(|l| *l != TcLabel::Canard)
            .collect();
        let switches = labels.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(switches, 1);
        assert_eq!(labels[0], TcLabel::CriticalTransition);
    }
}
