//! Sample-path estimators for slow–fast SDEs: escape from confidence strips,
//! transitions through (avoided) transcritical points, and spiking patterns
//! of the excitable FitzHugh–Nagumo system.

mod fhn;
mod strip;
mod transcritical;

use serde::{Deserialize, Serialize};

use crate::stats::wilson95;

pub use fhn::*;
pub use strip::*;
pub use transcritical::*;

/// Default fixed step for fast–slow SDEs with fast drift of order `1/eps`.
pub fn default_step(eps: f64) -> f64 {
    (1e-3f64).min(eps / 50.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbEstimate {
    pub p_hat: f64,
    pub hits: usize,
    pub n: usize,
    /// Wilson 95% interval.
    pub ci95: (f64, f64),
    pub seed: u64,
}

impl ProbEstimate {
    pub fn from_counts(hits: usize, n: usize, seed: u64) -> Self {
        Self { p_hat: hits as f64 / n as f64, hits, n, ci95: wilson95(hits, n), seed }
    }

    pub fn overlaps(&self, other: &ProbEstimate) -> bool {
        self.ci95.0 <= other.ci95.1 && other.ci95.0 <= self.ci95.1
    }
}
