use std::fmt::Debug;
use std::io::{self, Write};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{KernelError, Result};
use crate::scalar::Real;

/// A point of the open parameter cone: `eps > 0`, `second > 0` and an
/// optional strictly positive third parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint<T> {
    eps: T,
    second: T,
    third: Option<T>,
}

impl<T: Copy + PartialOrd + Zero + Debug> ParamPoint<T> {
    pub fn new(eps: T, second: T) -> Result<Self> {
        Self::build(eps, second, None)
    }

    pub fn with_third(eps: T, second: T, third: T) -> Result<Self> {
        Self::build(eps, second, Some(third))
    }

    fn build(eps: T, second: T, third: Option<T>) -> Result<Self> {
        let pos = |v: T| v > T::zero();
        if !pos(eps) || !pos(second) || third.is_some_and(|c| !pos(c)) {
            return Err(KernelError::InvalidInput(format!(
                "parameter point must be strictly positive, got eps={eps:?} second={second:?} third={third:?}"
            )));
        }
        Ok(Self { eps, second, third })
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn second(&self) -> T {
        self.second
    }

    pub fn third(&self) -> Option<T> {
        self.third
    }
}

/// A point on the boundary of the cone, where one of the singular limits has
/// already been taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AxisPoint<T> {
    /// `second = 0`, `eps > 0`.
    EpsAxis { eps: T },
    /// `eps = 0`, `second > 0`.
    SecondAxis { second: T },
    Origin,
}

/// Either an interior point or an axis point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConePoint<T> {
    Interior(ParamPoint<T>),
    Axis(AxisPoint<T>),
}

impl<T: Copy + PartialOrd + Zero + Debug> ConePoint<T> {
    /// Sort a non-negative pair into interior or axis.
    pub fn from_pair(eps: T, second: T) -> Result<Self> {
        let z = T::zero();
        // NaN fails both comparisons and lands here as well.
        if !(eps >= z) || !(second >= z) {
            return Err(KernelError::InvalidInput(format!(
                "cone coordinates must be non-negative, got ({eps:?}, {second:?})"
            )));
        }
        Ok(match (eps > z, second > z) {
            (true, true) => ConePoint::Interior(ParamPoint { eps, second, third: None }),
            (true, false) => ConePoint::Axis(AxisPoint::EpsAxis { eps }),
            (false, true) => ConePoint::Axis(AxisPoint::SecondAxis { second }),
            (false, false) => ConePoint::Axis(AxisPoint::Origin),
        })
    }

    pub fn eps(&self) -> T {
        match self {
            ConePoint::Interior(p) => p.eps,
            ConePoint::Axis(AxisPoint::EpsAxis { eps }) => *eps,
            ConePoint::Axis(_) => T::zero(),
        }
    }

    pub fn second(&self) -> T {
        match self {
            ConePoint::Interior(p) => p.second,
            ConePoint::Axis(AxisPoint::SecondAxis { second }) => *second,
            ConePoint::Axis(_) => T::zero(),
        }
    }

    pub fn is_axis(&self) -> bool {
        matches!(self, ConePoint::Axis(_))
    }
}

/// How a trajectory was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub integrator: String,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub step: Option<f64>,
}

/// Time-ordered samples of a state vector.
///
/// When derivatives are stored alongside the states, `interpolate` uses
/// cubic Hermite interpolation; otherwise it is piecewise linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    dim: usize,
    times: Vec<T>,
    states: Vec<T>,
    derivs: Vec<T>,
    pub meta: TrajectoryMeta,
}

impl<T: Real> Trajectory<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, times: Vec::new(), states: Vec::new(), derivs: Vec::new(), meta: TrajectoryMeta::default() }
    }

    pub fn with_meta(dim: usize, meta: TrajectoryMeta) -> Self {
        Self { meta, ..Self::new(dim) }
    }

    fn check_push(&self, t: T, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(KernelError::InvalidInput(format!(
                "state has length {} but trajectory dimension is {}",
                x.len(),
                self.dim
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(KernelError::InvalidInput(format!(
                    "sample times must increase strictly ({} after {})",
                    t, last
                )));
            }
        }
        Ok(())
    }

    /// Append a sample without derivative. Mixing with `push_with_deriv` is
    /// rejected.
    pub fn push(&mut self, t: T, x: &[T]) -> Result<()> {
        self.check_push(t, x)?;
        if !self.derivs.is_empty() {
            return Err(KernelError::InvalidInput("trajectory stores derivatives".into()));
        }
        self.times.push(t);
        self.states.extend_from_slice(x);
        Ok(())
    }

    pub fn push_with_deriv(&mut self, t: T, x: &[T], dx: &[T]) -> Result<()> {
        self.check_push(t, x)?;
        if dx.len() != self.dim || self.derivs.len() != self.states.len() {
            return Err(KernelError::InvalidInput("derivative storage mismatch".into()));
        }
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.derivs.extend_from_slice(dx);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[T] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn deriv(&self, i: usize) -> Option<&[T]> {
        if self.derivs.is_empty() {
            None
        } else {
            Some(&self.derivs[i * self.dim..(i + 1) * self.dim])
        }
    }

    pub fn has_derivs(&self) -> bool {
        !self.derivs.is_empty()
    }

    pub fn first(&self) -> Option<(T, &[T])> {
        (!self.is_empty()).then(|| (self.times[0], self.state(0)))
    }

    pub fn last(&self) -> Option<(T, &[T])> {
        let n = self.len();
        (n > 0).then(|| (self.times[n - 1], self.state(n - 1)))
    }

    pub fn t_start(&self) -> T {
        self.times[0]
    }

    pub fn t_end(&self) -> T {
        self.times[self.len() - 1]
    }

    pub fn component(&self, j: usize) -> Vec<T> {
        (0..self.len()).map(|i| self.states[i * self.dim + j]).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &[T])> + '_ {
        self.times.iter().copied().zip(self.states.chunks(self.dim.max(1)))
    }

    /// Index `i` such that `times[i] <= t <= times[i+1]`, clamped to the ends.
    fn bracket(&self, t: T) -> usize {
        let n = self.len();
        if n < 2 || t <= self.times[0] {
            return 0;
        }
        if t >= self.times[n - 1] {
            return n - 2;
        }
        self.times.partition_point(|&s| s <= t).saturating_sub(1).min(n - 2)
    }

    /// Evaluate the interpolant on segment `i` at `t` into `out`.
    pub fn interpolate_segment(&self, i: usize, t: T, out: &mut [T]) {
        let d = self.dim;
        if self.len() == 1 {
            out.copy_from_slice(self.state(0));
            return;
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let x0 = &self.states[i * d..(i + 1) * d];
        let x1 = &self.states[(i + 1) * d..(i + 2) * d];
        if self.derivs.is_empty() {
            for k in 0..d {
                out[k] = x0[k] + s * (x1[k] - x0[k]);
            }
            return;
        }
        let f0 = &self.derivs[i * d..(i + 1) * d];
        let f1 = &self.derivs[(i + 1) * d..(i + 2) * d];
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + one;
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        for k in 0..d {
            out[k] = h00 * x0[k] + h10 * h * f0[k] + h01 * x1[k] + h11 * h * f1[k];
        }
    }

    /// State at time `t` (clamped extrapolation outside the sampled range).
    pub fn interpolate(&self, t: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        if self.is_empty() {
            return out;
        }
        let i = self.bracket(t);
        self.interpolate_segment(i, t, &mut out);
        out
    }

    /// Write `t,x0,x1,...` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::from("t");
        for j in 0..self.dim {
            header.push_str(&format!(",x{j}"));
        }
        writeln!(w, "{header}")?;
        for (t, x) in self.iter() {
            write!(w, "{}", fmt17(t.as_f64()))?;
            for v in x {
                write!(w, ",{}", fmt17(v.as_f64()))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Format with 17 significant digits, enough to round-trip an `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// A crossing of an event section.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing<T> {
    pub t: T,
    pub state: Vec<T>,
    /// Index of the sample preceding the crossing.
    pub segment: usize,
}

/// Hypersurface `x[coord] = level` with optional windows on the remaining
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSection<T> {
    coord: usize,
    level: T,
    windows: Vec<(usize, T, T)>,
}

impl<T: Real> EventSection<T> {
    pub fn new(coord: usize, level: T) -> Result<Self> {
        if !level.is_finite() {
            return Err(KernelError::InvalidInput("section level must be finite".into()));
        }
        Ok(Self { coord, level, windows: Vec::new() })
    }

    /// Restrict coordinate `j` to `[lo, hi]` at the crossing.
    pub fn window(mut self, j: usize, lo: T, hi: T) -> Result<Self> {
        if j == self.coord || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(KernelError::InvalidInput(format!("bad window on coordinate {j}")));
        }
        self.windows.push((j, lo, hi));
        Ok(self)
    }

    pub fn coord(&self) -> usize {
        self.coord
    }

    pub fn level(&self) -> T {
        self.level
    }

    pub fn contains_transverse(&self, x: &[T]) -> bool {
        self.windows.iter().all(|&(j, lo, hi)| x[j] >= lo && x[j] <= hi)
    }

    /// First crossing of the section inside the windows, located by bisection
    /// on the trajectory interpolant to `1e-10` of the trajectory time span.
    pub fn first_crossing(&self, traj: &Trajectory<T>) -> Option<Crossing<T>> {
        self.crossings(traj).into_iter().next()
    }

    pub fn crossings(&self, traj: &Trajectory<T>) -> Vec<Crossing<T>> {
        let mut out = Vec::new();
        if traj.len() < 2 || self.coord >= traj.dim() {
            return out;
        }
        let span = traj.t_end() - traj.t_start();
        let tol = span * T::lit(1e-10);
        let g = |x: &[T]| x[self.coord] - self.level;
        let mut buf = vec![T::zero(); traj.dim()];
        for i in 0..traj.len() - 1 {
            let g0 = g(traj.state(i));
            let g1 = g(traj.state(i + 1));
            let hit = (g0 < T::zero() && g1 >= T::zero()) || (g0 > T::zero() && g1 <= T::zero());
            if !hit {
                continue;
            }
            let (mut a, mut b) = (traj.times()[i], traj.times()[i + 1]);
            let mut ga = g0;
            while b - a > tol {
                let m = (a + b) / T::lit(2.0);
                traj.interpolate_segment(i, m, &mut buf);
                let gm = g(&buf);
                if (gm < T::zero()) == (ga < T::zero()) && gm != T::zero() {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            let tc = (a + b) / T::lit(2.0);
            traj.interpolate_segment(i, tc, &mut buf);
            if self.contains_transverse(&buf) {
                out.push(Crossing { t: tc, state: buf.clone(), segment: i });
            }
        }
        out
    }
}

/// A sampled stochastic path with the seed and step that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SdePath<T> {
    pub path: Trajectory<T>,
    pub seed: u64,
    pub step: T,
}

/// A piecewise-deterministic path: one deterministic segment per visit to a
/// mode, joined continuously at the jump instants, plus the jump log.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingPath<T> {
    pub segments: Vec<super::Segment<T>>,
    pub jumps: Vec<super::Jump<T>>,
    pub seed: u64,
}

impl<T: Real> SwitchingPath<T> {
    /// Mode active at time `t` (right-continuous).
    pub fn mode_at(&self, t: T) -> usize {
        let k = self.jumps.partition_point(|j| j.time <= t);
        self.segments[k.min(self.segments.len() - 1)].mode
    }

    pub fn state_at(&self, t: T) -> Vec<T> {
        let k = self.jumps.partition_point(|j| j.time <= t).min(self.segments.len() - 1);
        self.segments[k].traj.interpolate(t)
    }

    pub fn final_state(&self) -> Option<&[T]> {
        self.segments.last().and_then(|s| s.traj.last()).map(|(_, x)| x)
    }
}
