use thiserror::Error;

use crate::kernel::KernelError;

/// Failures of the problem modules. [`Error::name`] gives the stable variant
/// name reported by the command-line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("jacobian disagrees with finite differences (relative error {rel_err:e})")]
    JacobianMismatch { rel_err: f64 },
    #[error("trajectory left the box without meeting any classification criterion")]
    Ambiguous,
    #[error("Lyapunov estimate {estimate} with standard error {se} does not determine a sign")]
    Indeterminate { estimate: f64, se: f64 },
    #[error("no spikes observed (count {count}); the run is too short for this regime")]
    NoSpikes { count: usize },
    #[error("quadrature did not converge (estimate {estimate}, error {error:e})")]
    QuadratureNonConvergent { estimate: f64, error: f64 },
    #[error("root not bracketed on [{lo}, {hi}]")]
    BracketingFailure { lo: f64, hi: f64 },
    #[error("singular linear system")]
    SingularLinearSystem,
    #[error("density normalization failed: {0}")]
    NormalizationFailure(String),
    #[error("Newton iteration diverged (residual {residual:e})")]
    NewtonDiverged { residual: f64 },
    #[error("profile reached the singular set 1+u = {gap:e}")]
    SingularityHit { gap: f64 },
    #[error("continuation stalled at lambda = {lambda}")]
    ContinuationStalled { lambda: f64 },
    #[error("degenerate competition: a1*a2 = b1*b2")]
    DegenerateCompetition,
    #[error("homogeneous state is not positive: ({u}, {v})")]
    NonpositiveState { u: f64, v: f64 },
    #[error("homogeneous state leaves positivity inside the requested window")]
    StateLeavesPositivity,
    #[error("labels do not both occur in the diagram")]
    NoBoundary,
    #[error("degenerate fit: {0}")]
    Degenerate(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::Kernel(KernelError::StepUnderflow { .. }) => "StepUnderflow",
            Error::Kernel(KernelError::NonFiniteState { .. }) => "NonFiniteState",
            Error::Kernel(KernelError::InvalidInput(_)) | Error::InvalidInput(_) => "InvalidInput",
            Error::JacobianMismatch { .. } => "JacobianMismatch",
            Error::Ambiguous => "Ambiguous",
            Error::Indeterminate { .. } => "Indeterminate",
            Error::NoSpikes { .. } => "NoSpikes",
            Error::QuadratureNonConvergent { .. } => "QuadratureNonConvergent",
            Error::BracketingFailure { .. } => "BracketingFailure",
            Error::SingularLinearSystem => "SingularLinearSystem",
            Error::NormalizationFailure(_) => "NormalizationFailure",
            Error::NewtonDiverged { .. } => "NewtonDiverged",
            Error::SingularityHit { .. } => "SingularityHit",
            Error::ContinuationStalled { .. } => "ContinuationStalled",
            Error::DegenerateCompetition => "DegenerateCompetition",
            Error::NonpositiveState { .. } => "NonpositiveState",
            Error::StateLeavesPositivity => "StateLeavesPositivity",
            Error::NoBoundary => "NoBoundary",
            Error::Degenerate(_) => "Degenerate",
            Error::Io(_) => "IO",
        }
    }

    /// Input errors map to exit code 1, everything else to 2.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::Kernel(KernelError::InvalidInput(_)))
    }
}

impl From<crate::kernel::quad::QuadError> for Error {
    fn from(e: crate::kernel::quad::QuadError) -> Self {
        Error::QuadratureNonConvergent { estimate: e.estimate, error: e.error }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be non-negative and finite, got {v}")))
    }
}
