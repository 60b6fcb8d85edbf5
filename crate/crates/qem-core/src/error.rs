use alloc::string::String;
use core::fmt;

/// Errors produced by the simulation and post-processing core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument was violated.
    InvalidArgument(String),
    /// A quantum state failed a structural requirement (e.g. normalization).
    InvalidState(String),
    /// The request exceeds what this backend supports (e.g. too many qubits).
    Capability(String),
    /// Two datasets that must share keys do not; carries the missing keys.
    Alignment(String),
    /// A caller contract was violated (e.g. axis/pre-rotation mismatch).
    Contract(String),
    /// Post-selection discarded every shot.
    DegeneratePostSelection,
    /// Training diverged (loss became non-finite) at the given epoch.
    TrainingDiverged { epoch: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::InvalidState(msg) => write!(f, "invalid state: {msg}"),
            Error::Capability(msg) => write!(f, "capability exceeded: {msg}"),
            Error::Alignment(msg) => write!(f, "dataset alignment error: {msg}"),
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::DegeneratePostSelection => {
                write!(f, "post-selection discarded all shots")
            }
            Error::TrainingDiverged { epoch } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}")
            }
        }
    }
}

impl core::error::Error for Error {}
