//! Piecewise-deterministic Markov processes with state-independent switching
//! rates: a continuous-time Markov chain selects the active vector field.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ode::{Control, OdeOptions, OdeSolver};
use super::path::{SwitchingPath, Trajectory, TrajectoryMeta};
use super::seed::rng_from_seed;
use super::{KernelError, Result};
use crate::scalar::Real;

pub type ModeField<'a, T> = &'a (dyn Fn(T, &[T], &mut [T]) + Sync);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump<T> {
    pub time: T,
    pub from: usize,
    pub to: usize,
}

/// One deterministic piece of a switching path.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T> {
    pub mode: usize,
    pub traj: Trajectory<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdmpOptions<T> {
    pub ode: OdeOptions<T>,
}

impl<T: Real> Default for PdmpOptions<T> {
    fn default() -> Self {
        Self { ode: OdeOptions::default() }
    }
}

fn validate_rates<T: Real>(rates: &[Vec<T>], mode0: usize) -> Result<()> {
    let n = rates.len();
    if n == 0 || rates.iter().any(|r| r.len() != n) {
        return Err(KernelError::InvalidInput("rate matrix must be square and non-empty".into()));
    }
    for (i, row) in rates.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if i != j && (!(r >= T::zero()) || !r.is_finite()) {
                return Err(KernelError::InvalidInput(format!("rate {i}->{j} must be finite and non-negative")));
            }
        }
    }
    if mode0 >= n {
        return Err(KernelError::InvalidInput(format!("initial mode {mode0} out of range")));
    }
    Ok(())
}

/// Draw the next jump from `mode` at time `t`; `None` if the mode is absorbing.
fn next_jump<T: Real>(rates: &[Vec<T>], mode: usize, t: T, rng: &mut ChaCha8Rng) -> Option<Jump<T>> {
    let row = &rates[mode];
    let total: f64 = row.iter().enumerate().filter(|&(j, _)| j != mode).map(|(_, r)| r.as_f64()).sum();
    if total <= 0.0 {
        return None;
    }
    let u: f64 = rng.random();
    let hold = -(1.0 - u).ln() / total;
    let mut pick = rng.random::<f64>() * total;
    let mut to = mode;
    for (j, r) in row.iter().enumerate() {
        if j == mode {
            continue;
        }
        to = j;
        pick -= r.as_f64();
        if pick < 0.0 {
            break;
        }
    }
    Some(Jump { time: t + T::lit(hold), from: mode, to })
}

/// Jump log of the mode chain on `[0, t_end]`.
pub fn sample_jumps<T: Real>(rates: &[Vec<T>], mode0: usize, t_end: T, seed: u64) -> Result<Vec<Jump<T>>> {
    validate_rates(rates, mode0)?;
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    let mut t = T::zero();
    let mut mode = mode0;
    while let Some(j) = next_jump(rates, mode, t, &mut rng) {
        if j.time >= t_end {
            break;
        }
        t = j.time;
        mode = j.to;
        out.push(j);
    }
    Ok(out)
}

/// Simulate on `[0, t_end]`, streaming each deterministic segment to `sink`
/// instead of storing the path. Returns the jump log and the final state.
///
/// The jump times depend only on the seed and the rate matrix, never on the
/// ODE tolerances.
#[allow(clippy::too_many_arguments)]
pub fn integrate_pdmp_with<T, S>(
    fields: &[ModeField<'_, T>],
    rates: &[Vec<T>],
    state0: &[T],
    mode0: usize,
    t_end: T,
    seed: u64,
    opts: &PdmpOptions<T>,
    mut sink: S,
) -> Result<(Vec<Jump<T>>, Vec<T>)>
where
    T: Real,
    S: FnMut(&Segment<T>) -> Control,
{
    validate_rates(rates, mode0)?;
    if fields.len() != rates.len() {
        return Err(KernelError::InvalidInput(format!(
            "{} mode fields supplied for {} modes",
            fields.len(),
            rates.len()
        )));
    }
    if !(t_end > T::zero()) {
        return Err(KernelError::InvalidInput("t_end must be positive".into()));
    }
    let dim = state0.len();
    let mut rng = rng_from_seed(seed);
    let mut solver = OdeSolver::new(dim, opts.ode)?;
    let mut jumps = Vec::new();
    let mut t = T::zero();
    let mut mode = mode0;
    let mut x = state0.to_vec();
    loop {
        let jump = next_jump(rates, mode, t, &mut rng).filter(|j| j.time < t_end);
        let t_next = jump.map_or(t_end, |j| j.time);
        let field = fields[mode];
        let mut traj = Trajectory::with_meta(
            dim,
            TrajectoryMeta { integrator: "dopri5".into(), rel_tol: Some(opts.ode.rel_tol.as_f64()), abs_tol: Some(opts.ode.abs_tol.as_f64()), step: None },
        );
        if t_next > t {
            let (_, xe) = solver.drive(&|s: T, y: &[T], d: &mut [T]| field(s, y, d), t, &x, t_next, |s, y, d| {
                // times strictly increase inside one drive call
                let _ = traj.push_with_deriv(s, y, d);
                Control::Continue
            })?;
            x = xe;
        }
        let stop = sink(&Segment { mode, traj }) == Control::Stop;
        match jump {
            Some(j) if !stop => {
                jumps.push(j);
                t = j.time;
                mode = j.to;
            }
            _ => break,
        }
    }
    Ok((jumps, x))
}

/// Simulate and store the full switching path on `[0, t_end]`.
pub fn integrate_pdmp<T: Real>(
    fields: &[ModeField<'_, T>],
    rates: &[Vec<T>],
    state0: &[T],
    mode0: usize,
    t_end: T,
    seed: u64,
) -> Result<SwitchingPath<T>> {
    let mut segments = Vec::new();
    let (jumps, _) = integrate_pdmp_with(fields, rates, state0, mode0, t_end, seed, &PdmpOptions::default(), |s| {
        segments.push(s.clone());
        Control::Continue
    })?;
    Ok(SwitchingPath { segments, jumps, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain_occupation() {
        // rates 0->1 = 1, 1->0 = 3: stationary occupation of mode 0 is 3/4
        let rates = vec![vec![0.0, 1.0], vec![3.0, 0.0]];
        let t_end = 20_000.0;
        let jumps = sample_jumps(&rates, 0, t_end, 5).unwrap();
        let mut t: f64 = 0.0;
        let mut mode = 0;
        let mut in0: f64 = 0.0;
        for j in &jumps {
            assert_eq!(j.from, mode);
            if mode == 0 {
                in0 += j.time - t;
            }
            t = j.time;
            mode = j.to;
        }
        if mode == 0 {
            in0 += t_end - t;
        }
        assert!((in0 / t_end - 0.75).abs() < 0.02);
    }

    #[test]
    fn path_is_continuous_across_jumps() {
        let f0 = |_: f64, x: &[f64], d: &mut [f64]| d[0] = 1.0 - x[0];
        let f1 = |_: f64, x: &[f64], d: &mut [f64]| d[0] = -x[0];
        let fields: [ModeField<f64>; 2] = [&f0, &f1];
        let rates = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        let p = integrate_pdmp(&fields, &rates, &[0.5], 0, 10.0, 3).unwrap();
        assert_eq!(p.segments.len(), p.jumps.len() + 1);
        for w in p.segments.windows(2) {
            let (ta, xa) = w[0].traj.last().unwrap();
            let (tb, xb) = w[1].traj.first().unwrap();
            assert_eq!(ta, tb);
            assert_eq!(xa, xb);
        }
        for s in &p.segments {
            for (_, x) in s.traj.iter() {
                assert!(x[0] > 0.0 && x[0] < 1.0);
            }
        }
        let jumps = sample_jumps(&rates, 0, 10.0, 3).unwrap();
        assert_eq!(jumps, p.jumps);
    }

    #[test]
    fn missing_field_rejected() {
        let f0 = |_: f64, _x: &[f64], d: &mut [f64]| d[0] = 0.0;
        let fields: [ModeField<f64>; 1] = [&f0];
        let rates = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(integrate_pdmp(&fields, &rates, &[0.0], 0, 1.0, 0).is_err());
        assert!(sample_jumps(&[vec![0.0, -1.0], vec![1.0, 0.0]], 0, 1.0, 0).is_err());
    }
}
