//! Numerical toolkit for singular-limit problems in the two-parameter cone
//! (`eps`, `delta`): deterministic fast–slow flows, stochastic paths,
//! piecewise-deterministic switching and boundary-value problems, together
//! with the parameter sweeps that turn them into regime diagrams.
//!
//! The kernel is generic over the scalar (`f32` or `f64`); the problem
//! modules work in `f64`. Exact rational arithmetic is supported where a
//! formula is purely algebraic (see [`classical`]).

pub mod scalar;
pub mod kernel;
pub mod error;
pub mod stats;

pub mod bvp;
pub mod classical;
pub mod dispersion;
pub mod fastslow;
pub mod shear;
pub mod pdmp;
pub mod stochastic;
pub mod sweep;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ParamPoint64 = kernel::ParamPoint<f64>;
pub type ConePoint64 = kernel::ConePoint<f64>;
pub type Trajectory64 = kernel::Trajectory<f64>;
pub type SdePath64 = kernel::SdePath<f64>;
pub type SwitchingPath64 = kernel::SwitchingPath<f64>;
