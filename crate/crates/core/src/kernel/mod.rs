//! Shared domain types and the three integration backends used by every
//! problem module: adaptive deterministic flows, fixed-step stochastic paths
//! and event-driven switching.

mod ode;
mod path;
pub mod quad;
mod sde;
mod seed;
mod switching;

use thiserror::Error;

pub use ode::{integrate_ode, integrate_ode_with, Control, OdeOptions, OdeSolver, StepStats};
pub use path::{
    AxisPoint, ConePoint, Crossing, EventSection, ParamPoint, SdePath, SwitchingPath, Trajectory,
    TrajectoryMeta,
};
pub use sde::{integrate_sde, NoiseSource, Scheme, SdeStepper};
pub use seed::{derive_seed, rng_from_seed};
pub use switching::{
    integrate_pdmp, integrate_pdmp_with, sample_jumps, Jump, ModeField, PdmpOptions, Segment,
};

/// Failures of the integration backends.
///
/// `NonFiniteState` is an ordinary outcome: callers interpret it (finite-time
/// blow-up, escape to infinity) rather than treating it as a crash.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("step size underflow at t = {t} (step {step:e} below 1e-14 of the span)")]
    StepUnderflow { t: f64, step: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl KernelError {
    pub fn is_non_finite(&self) -> bool {
        matches!(self, KernelError::NonFiniteState { .. })
    }
}

pub type Result<T> = std::result::Result<T, KernelError>;
