use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate law: single-point support at value {value}")]
    DegenerateLaw { value: i64 },

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    /// A coupling mass at or above the structural characteristic would drive
    /// some `mu_k` to zero.
    #[error("mass {mass} must be strictly below the structural characteristic {vartheta_x}")]
    Strictness { mass: String, vartheta_x: String },

    #[error("infeasible mu at index {index}: {reason}")]
    InfeasibleMu { index: i64, reason: InfeasibleReason },

    #[error("inconsistent coupling: {0}")]
    InconsistentCoupling(String),

    #[error("numeric integrity: {what} has imaginary residue {residue:e} (tolerance {tolerance:e})")]
    NumericIntegrity {
        what: &'static str,
        residue: f64,
        tolerance: f64,
    },

    #[error("enumeration needs {paths} paths, cap is {cap}")]
    CapExceeded { paths: u128, cap: u128 },

    #[error("section of the test set at height {phi} is empty")]
    EmptySection { phi: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    /// True for failures of floating-point integrity checks, as opposed to bad
    /// input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericIntegrity { .. })
    }
}

/// Why `solve_tau` rejected a `mu` sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// The recursion produced a negative `tau_k`.
    NegativeTau(String),
    /// `tau` did not vanish at the right edge of the support.
    RightEdgeResidual(String),
}

impl fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfeasibleReason::NegativeTau(v) => write!(f, "tau = {v} is negative"),
            InfeasibleReason::RightEdgeResidual(v) => {
                write!(f, "right-edge residual tau = {v} is nonzero")
            }
        }
    }
}
