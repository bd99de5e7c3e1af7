use crate::kernel::Trajectory;

/// Strict interior local maxima of a sampled signal whose topographic
/// prominence is at least `prominence`. Plateaus count once.
pub fn count_maxima_values(v: &[f64], prominence: f64) -> usize {
    let n = v.len();
    if n < 3 {
        return 0;
    }
    let mut count = 0;
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            // walk over a plateau
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] {
                let peak = v[i];
                let mut lmin = peak;
                for k in (0..i).rev() {
                    if v[k] > peak {
                        break;
                    }
                    lmin = lmin.min(v[k]);
                }
                let mut rmin = peak;
                for &x in &v[j + 1..] {
                    if x > peak {
                        break;
                    }
                    rmin = rmin.min(x);
                }
                if peak - lmin.max(rmin) >= prominence {
                    count += 1;
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    count
}

/// Local maxima of component `var` over the samples with `t` in `window`.
pub fn count_maxima(traj: &Trajectory<f64>, var: usize, window: (f64, f64), prominence: f64) -> usize {
    let v: Vec<f64> = traj.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1).map(|(_, x)| x[var]).collect();
    count_maxima_values(&v, prominence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::integrate_ode;

    #[test]
    fn sine_and_constant() {
        let v: Vec<f64> = (0..=4000).map(|i| (i as f64 * 4.0 * std::f64::consts::PI / 4000.0).sin()).collect();
        assert_eq!(count_maxima_values(&v, 1e-6), 2);
        assert_eq!(count_maxima_values(&[1.0; 50], 0.0), 0);
        // low-prominence ripple on a ramp is ignored
        let r: Vec<f64> = (0..200).map(|i| i as f64 * 0.01 + 1e-4 * (i as f64).sin()).collect();
        assert_eq!(count_maxima_values(&r, 1e-2), 0);
    }

    #[test]
    fn trajectory_window() {
        let tr = integrate_ode(|_, x: &[f64], d: &mut [f64]| {
            d[0] = x[1];
            d[1] = -x[0];
        }, &[0.0, 1.0], (0.0, 30.0), 1e-10, 1e-12).unwrap();
        // x = sin t has maxima at pi/2 + 2 pi k
        assert_eq!(count_maxima(&tr, 0, (0.0, 4.0 * std::f64::consts::PI), 1e-3), 2);
        assert_eq!(count_maxima(&tr, 0, (0.0, 30.0), 1e-3), 5);
    }
}
