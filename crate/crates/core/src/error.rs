use thiserror::Error;

/// Failure modes shared by every module.
///
/// The variants fall into three families (see [`ErrorKind`]): caller
/// contract violations, numerical failures that come from the geometry or
/// the integrator, and structural mismatches that indicate a convention bug
/// inside the library itself.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate configuration{}: {reason}", fmt_index(*.index))]
    DegenerateConfiguration { index: Option<i64>, reason: String },

    #[error("chain is not normalized: {0}")]
    NotNormalized(String),

    #[error("no unimodular lift exists: gcd(n = {n}, d + 1 = {}) != 1", .d + 1)]
    NoLift { n: usize, d: usize },

    #[error("normalization constant {0} has no rational root of the required degree")]
    IrrationalNormalization(String),

    #[error("random polygon generation failed after {0} attempts")]
    GenerationFailed(usize),

    #[error("structural mismatch: {0}")]
    StructuralMismatch(String),

    #[error("eigenvector component sum vanishes for eigenvalue {0} (pole of the normalized Bloch solution)")]
    NormalizationPole(String),

    #[error("repeated spectrum: {0}")]
    RepeatedSpectrum(String),

    #[error("flow diverged at step {step}")]
    Diverged { step: usize },

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("parse error: {0}")]
    Parse(String),
}

fn fmt_index(index: Option<i64>) -> String {
    match index {
        Some(i) => format!(" at index {i}"),
        None => String::new(),
    }
}

/// Coarse triage of an [`Error`], used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Contract,
    Numerical,
    Structural,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Contract(_) | Error::NotNormalized(_) | Error::NoLift { .. } | Error::Parse(_) => {
                ErrorKind::Contract
            }
            Error::StructuralMismatch(_) => ErrorKind::Structural,
            _ => ErrorKind::Numerical,
        }
    }

    pub(crate) fn degenerate(index: impl Into<Option<i64>>, reason: impl Into<String>) -> Self {
        Error::DegenerateConfiguration {
            index: index.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
