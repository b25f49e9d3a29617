use thiserror::Error;

/// Every failure mode of the laboratory.
///
/// Faults raised by the physics (positivity, stability, contraction) are kept
/// distinct from usage and I/O faults so the CLI can map them to exit codes.
#[derive(Debug, Error)]
pub enum CpeError {
    #[error("numerical fault: non-finite value in {0}")]
    NumericalFault(String),
    #[error("usage fault: {0}")]
    UsageFault(String),
    #[error("specific volume positivity lost: min sigma = {min:e}")]
    SigmaPositivityLost { min: f64 },
    #[error("pressure positivity lost: min p = {min:e}")]
    PressurePositivityLost { min: f64 },
    #[error("even-extension symmetry violated: defect = {defect:e}")]
    SymmetryFault { defect: f64 },
    #[error("stability fault at step {step}: norm grew by {growth:.3e} in one step")]
    StabilityFault { step: usize, growth: f64 },
    #[error("Picard iteration is not contracting (ratios: {ratios:?})")]
    NoContraction { deltas: Vec<f64>, ratios: Vec<f64> },
    #[error("parse fault at `{key}`: {reason}")]
    ParseFault { key: String, reason: String },
    #[error("constraint fault at `{key}`: {reason}")]
    ConstraintFault { key: String, reason: String },
    #[error("format fault{}: {reason}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    FormatFault { offset: Option<u64>, reason: String },
    #[error("io fault: {0}")]
    IoFault(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CpeError>;

impl CpeError {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        CpeError::UsageFault(msg.into())
    }

    pub(crate) fn constraint(key: &str, reason: impl Into<String>) -> Self {
        CpeError::ConstraintFault {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(key: &str, reason: impl Into<String>) -> Self {
        CpeError::ParseFault {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn format(offset: Option<u64>, reason: impl Into<String>) -> Self {
        CpeError::FormatFault {
            offset,
            reason: reason.into(),
        }
    }

    /// Exit code the CLI reports for this fault.
    pub fn exit_code(&self) -> i32 {
        match self {
            CpeError::NoContraction { .. } | CpeError::StabilityFault { .. } => 3,
            _ => 2,
        }
    }
}
