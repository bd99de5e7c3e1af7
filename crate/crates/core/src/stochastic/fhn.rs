use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::kernel::{Scheme, SdeStepper};
use crate::stats::normal_cdf;

use super::default_step;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhnEquilibrium {
    pub p_star: (f64, f64),
    pub delta: f64,
    /// `(re, im)` of `lambda_+` and `lambda_-`.
    pub eigenvalues: [(f64, f64); 2],
}

/// Rest point `P* = (a, a^3 - a)`, `delta = (3a^2 - 1)/2` and the
/// eigenvalues `(-delta +- sqrt(delta^2 - eps))/eps` of the linearization.
pub fn fhn_equilibrium(a: f64, eps: f64) -> Result<FhnEquilibrium> {
    check_positive("eps", eps)?;
    let delta = 0.5 * (3.0 * a * a - 1.0);
    let disc = delta * delta - eps;
    let eigenvalues = if disc >= 0.0 {
        let r = disc.sqrt();
        [((-delta + r) / eps, 0.0), ((-delta - r) / eps, 0.0)]
    } else {
        let r = (-disc).sqrt();
        [(-delta / eps, r / eps), (-delta / eps, -r / eps)]
    };
    Ok(FhnEquilibrium { p_star: (a, a * a * a - a), delta, eigenvalues })
}

/// The `a > 1/sqrt(3)` giving a prescribed `delta`.
pub fn fhn_a_from_delta(delta: f64) -> f64 {
    ((2.0 * delta + 1.0) / 3.0).sqrt()
}

/// Probability that a spike is immediately followed by another.
pub fn fhn_respike_theory(eps: f64, delta: f64, sigma: f64) -> f64 {
    normal_cdf(-eps.powf(0.25) * (delta - sigma * sigma / eps) / sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FhnLabel {
    RareIsolated,
    Clusters,
    Repeated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeStats {
    pub spike_times: Vec<f64>,
    /// Small oscillations before the first spike, then between consecutive spikes.
    pub interspike_small_osc_counts: Vec<usize>,
    pub respike_fraction: f64,
    pub median_count: f64,
    pub label: FhnLabel,
    pub theory_respike: f64,
}

/// Spike and small-oscillation thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeRules {
    pub spike_low: f64,
    pub spike_return: f64,
    pub respike_window: f64,
    pub max_small_osc_for_respike: usize,
    pub small_osc_upper: f64,
    /// Lower amplitude cutoff in units of `sigma`.
    pub small_osc_lower: f64,
}

impl Default for SpikeRules {
    fn default() -> Self {
        Self { spike_low: -0.8, spike_return: 0.0, respike_window: 2.0, max_small_osc_for_respike: 1, small_osc_upper: 0.3, small_osc_lower: 2.0 }
    }
}

/// Label from the gap statistics.
pub fn fhn_label(median_count: f64, respike_fraction: f64) -> FhnLabel {
    if median_count >= 10.0 && respike_fraction < 0.2 {
        FhnLabel::RareIsolated
    } else if respike_fraction > 0.8 {
        FhnLabel::Repeated
    } else {
        FhnLabel::Clusters
    }
}

fn median(v: &[usize]) -> f64 {
    let mut s = v.to_vec();
    s.sort_unstable();
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2] as f64
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2]) as f64
    }
}

/// Streaming spike detector. A small oscillation is one completed turn
/// around `P*` whose largest distance to `P*` lies in `(2 sigma, upper)`.
struct Detector {
    p: (f64, f64),
    rules: SpikeRules,
    lower: f64,
    in_spike: bool,
    prev_phi: f64,
    turn: f64,
    turn_max: f64,
    current: usize,
    back: Option<f64>,
    spike_times: Vec<f64>,
    counts: Vec<usize>,
    /// Time from re-entering the small-oscillation ball to the next spike.
    gap_after_return: Vec<f64>,
}

impl Detector {
    fn new(p: (f64, f64), sigma: f64, rules: SpikeRules) -> Self {
        Self {
            p,
            rules,
            lower: rules.small_osc_lower * sigma,
            in_spike: false,
            prev_phi: 0.0,
            turn: 0.0,
            turn_max: 0.0,
            current: 0,
            back: Some(0.0),
            spike_times: Vec::new(),
            counts: Vec::new(),
            gap_after_return: Vec::new(),
        }
    }

    fn reset_turn(&mut self, x: f64, y: f64) {
        self.prev_phi = (y - self.p.1).atan2(x - self.p.0);
        self.turn = 0.0;
        self.turn_max = 0.0;
    }

    fn observe(&mut self, t: f64, x: f64, y: f64) {
        if self.in_spike {
            if x > self.rules.spike_return {
                self.in_spike = false;
                self.back = None;
                self.current = 0;
                self.reset_turn(x, y);
            }
            return;
        }
        if x < self.rules.spike_low {
            self.in_spike = true;
            self.spike_times.push(t);
            self.counts.push(self.current);
            self.gap_after_return.push(self.back.map_or(0.0, |b| t - b));
            return;
        }
        let (u, v) = (x - self.p.0, y - self.p.1);
        let d = u.hypot(v);
        if self.back.is_none() && d < self.rules.small_osc_upper {
            self.back = Some(t);
        }
        self.turn_max = self.turn_max.max(d);
        let phi = v.atan2(u);
        let mut dphi = phi - self.prev_phi;
        if dphi > std::f64::consts::PI {
            dphi -= 2.0 * std::f64::consts::PI;
        } else if dphi < -std::f64::consts::PI {
            dphi += 2.0 * std::f64::consts::PI;
        }
        self.prev_phi = phi;
        self.turn += dphi;
        if self.turn.abs() >= 2.0 * std::f64::consts::PI {
            if self.turn_max > self.lower && self.turn_max < self.rules.small_osc_upper {
                self.current += 1;
            }
            self.turn = 0.0;
            self.turn_max = 0.0;
        }
    }
}

/// One path of length `t_end` started at `P*`; spikes, small oscillations
/// and the regime label.
pub fn classify_fhn(eps: f64, delta: f64, sigma: f64, t_end: f64, base_seed: u64) -> Result<SpikeStats> {
    classify_fhn_with(eps, delta, sigma, t_end, base_seed, &SpikeRules::default())
}

pub fn classify_fhn_with(
    eps: f64,
    delta: f64,
    sigma: f64,
    t_end: f64,
    base_seed: u64,
    rules: &SpikeRules,
) -> Result<SpikeStats> {
    check_positive("eps", eps)?;
    check_positive("delta", delta)?;
    check_positive("sigma", sigma)?;
    check_positive("t_end", t_end)?;
    let a = fhn_a_from_delta(delta);
    let eq = fhn_equilibrium(a, eps)?;
    let step = default_step(eps);
    let sx = sigma / eps.sqrt();
    let mut st = SdeStepper::new(
        move |_: f64, z: &[f64], d: &mut [f64]| {
            d[0] = (z[0] - z[0] * z[0] * z[0] + z[1]) / eps;
            d[1] = a - z[0];
        },
        move |_: f64, _: &[f64], g: &mut [f64]| {
            g[0] = sx;
            g[1] = 0.0;
            g[2] = 0.0;
            g[3] = sigma;
        },
        2,
        2,
        step,
        Scheme::EulerMaruyama,
        base_seed,
    )?;
    let mut z = [eq.p_star.0, eq.p_star.1];
    let mut det = Detector::new(eq.p_star, sigma, *rules);
    det.reset_turn(z[0], z[1]);
    st.run(0.0, t_end, &mut z, |t, s| {
        det.observe(t, s[0], s[1]);
        true
    })?;
    if det.spike_times.is_empty() {
        return Err(Error::NoSpikes { count: 0 });
    }
    // gaps between consecutive spikes start at index 1 of the per-spike lists
    let n_gaps = det.spike_times.len() - 1;
    let respikes = (1..det.spike_times.len())
        .filter(|&i| {
            det.gap_after_return[i] <= rules.respike_window
                && det.counts[i] <= rules.max_small_osc_for_respike
        })
        .count();
    let respike_fraction = if n_gaps > 0 { respikes as f64 / n_gaps as f64 } else { 0.0 };
    let median_count = median(&det.counts);
    Ok(SpikeStats {
        label: fhn_label(median_count, respike_fraction),
        spike_times: det.spike_times,
        interspike_small_osc_counts: det.counts,
        respike_fraction,
        median_count,
        theory_respike: fhn_respike_theory(eps, delta, sigma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_examples() {
        let e = fhn_equilibrium(1.0, 0.25).unwrap();
        assert_eq!(e.delta, 1.0);
        assert!((e.eigenvalues[0].0 - (-1.0 + 0.75f64.sqrt()) / 0.25).abs() < 1e-12);
        assert!((e.eigenvalues[1].0 - (-1.0 - 0.75f64.sqrt()) / 0.25).abs() < 1e-12);
        assert_eq!(e.p_star, (1.0, 0.0));
        // repeated eigenvalue on delta^2 = eps
        let eps: f64 = 0.04;
        let e = fhn_equilibrium(fhn_a_from_delta(eps.sqrt()), eps).unwrap();
        assert!((e.eigenvalues[0].0 - e.eigenvalues[1].0).abs() < 1e-6);
        assert!((e.eigenvalues[0].0 + e.delta / eps).abs() < 1e-6);
        assert!((fhn_a_from_delta(0.03) - 0.59442).abs() < 1e-5);
    }

    #[test]
    fn label_rule() {
        assert_eq!(fhn_label(12.0, 0.1), FhnLabel::RareIsolated);
        assert_eq!(fhn_label(12.0, 0.5), FhnLabel::Clusters);
        assert_eq!(fhn_label(0.0, 0.9), FhnLabel::Repeated);
        assert_eq!(fhn_label(3.0, 0.1), FhnLabel::Clusters);
    }

    #[test]
    fn theory_is_half_on_curve() {
        // sigma^2 = delta eps makes the argument vanish
        let (eps, delta) = (0.01f64, 0.03);
        assert!((fhn_respike_theory(eps, delta, (delta * eps).sqrt()) - 0.5).abs() < 1e-12);
    }
}
