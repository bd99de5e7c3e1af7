//! Closed-form evaluators for the algebraic and elementary-analysis warm-up
//! problems. Everything here is exact for rational scalars, so these double as
//! oracles for the sweep engine.
//!
//! The polynomial is `f(x) = eps x^2 - delta`. Counting all real roots instead
//! of those in `[-1, 1]` leaves `{eps = 0, delta > 0}` as the only singular
//! line; that variant is not implemented.

use std::fmt::Debug;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::kernel::{AxisPoint, ConePoint, ParamPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassicalLabel {
    RootsTwo,
    RootsZero,
    ConvexAlways,
    PartialMinus,
    PartialPlus,
}

/// Generic scalar bound for the exact evaluators (`f32`, `f64`, `Ratio<i64>`, ...).
pub trait Exact:
    Copy
    + PartialOrd
    + Zero
    + One
    + Debug
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
{
}
impl<T> Exact for T where
    T: Copy
        + PartialOrd
        + Zero
        + One
        + Debug
        + std::ops::Sub<Output = T>
        + std::ops::Mul<Output = T>
        + std::ops::Div<Output = T>
{
}

/// Roots of `eps x^2 - delta` in `[-1, 1]`, with multiplicity: 2 iff `delta <= eps`.
pub fn root_count_unit_interval<T: Exact>(p: &ParamPoint<T>) -> u8 {
    if p.second() <= p.eps() {
        2
    } else {
        0
    }
}

/// Same count on the closed cone. On `delta = 0` there is a double root at
/// zero; on `eps = 0` there are none; at the origin `f` vanishes identically
/// and the count is undefined.
pub fn root_count_cone<T: Exact>(p: &ConePoint<T>) -> Option<u8> {
    match p {
        ConePoint::Interior(q) => Some(root_count_unit_interval(q)),
        ConePoint::Axis(AxisPoint::EpsAxis { .. }) => Some(2),
        ConePoint::Axis(AxisPoint::SecondAxis { .. }) => Some(0),
        ConePoint::Axis(AxisPoint::Origin) => None,
    }
}

pub fn root_label<T: Exact>(p: &ParamPoint<T>) -> ClassicalLabel {
    match root_count_unit_interval(p) {
        2 => ClassicalLabel::RootsTwo,
        _ => ClassicalLabel::RootsZero,
    }
}

/// `f` is convex in `x` for every `eps >= 0`.
pub fn convexity_property<T: Exact>(_p: &ConePoint<T>) -> u8 {
    1
}

/// `xy(x^2 - y^2)/(x^2 + y^2)`, zero at the origin.
pub fn clairaut_function<T: Exact>(x: T, y: T) -> T {
    let (x2, y2) = (x * x, y * y);
    let s = x2 + y2;
    if s == T::zero() {
        T::zero()
    } else {
        x * y * (x2 - y2) / s
    }
}

/// The mixed difference quotient at the origin with steps `(eps, delta)`.
///
/// Three of the four corner values vanish, leaving
/// `(eps^2 - delta^2)/(eps^2 + delta^2)`.
pub fn clairaut_quotient<T: Exact>(eps: T, delta: T) -> T {
    let z = T::zero();
    let num = clairaut_function(eps, delta) - clairaut_function(z, delta) + clairaut_function(z, z)
        - clairaut_function(eps, z);
    num / (eps * delta)
}

/// Quotient along the path `delta = path(eps)`.
pub fn clairaut_property(path: impl Fn(f64) -> f64, eps: f64) -> f64 {
    clairaut_quotient(eps, path(eps))
}

/// Sign of the quotient along a path (`0` on the diagonal).
pub fn clairaut_sign(path: impl Fn(f64) -> f64, eps: f64) -> i8 {
    let v = clairaut_property(path, eps);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn clairaut_label(eps: f64, delta: f64) -> Option<ClassicalLabel> {
    match clairaut_quotient(eps, delta) {
        v if v > 0.0 => Some(ClassicalLabel::PartialPlus),
        v if v < 0.0 => Some(ClassicalLabel::PartialMinus),
        _ => None,
    }
}
