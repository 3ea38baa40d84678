use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |H - H^dagger| entry = {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has {len} entries, which is not a positive perfect square")]
    NotSquare { len: usize },

    #[error("Hermitian eigensolver did not converge")]
    NoConvergence,

    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("protocol evaluation failed at t = {time}: {reason}")]
    Protocol { time: f64, reason: String },

    #[error("propagation did not reach tolerance within {steps} steps (last error estimate {last_error:e})")]
    PropagationCap { steps: usize, last_error: f64 },

    #[error("initial state is not the thermal state at this beta (max deviation {deviation:e})")]
    NotThermal { deviation: f64 },

    #[error("coherent components are not conjugate-paired (mismatch {mismatch:e})")]
    UnpairedCoherence { mismatch: f64 },

    #[error("Fock cutoff too small at stage '{stage}': top-two-level population {population:e}")]
    CutoffBreach {
        stage: &'static str,
        population: f64,
    },

    #[error("phase-space grid does not cover the Q function: boundary value {boundary:e}")]
    GridCoverage { boundary: f64 },

    #[error("basis does not match the expected eigenbasis (deviation {deviation:e})")]
    BasisMismatch { deviation: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Label for the stage that failed, used by the CLI diagnostics.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. }
            | Error::DimensionMismatch { .. }
            | Error::NotSquare { .. }
            | Error::NoConvergence => "linear algebra",
            Error::InvalidParameter { .. } => "parameters",
            Error::InvalidState(_) | Error::NotThermal { .. } => "initial state",
            Error::Protocol { .. } | Error::PropagationCap { .. } => "propagation",
            Error::UnpairedCoherence { .. } => "work distribution",
            Error::CutoffBreach { stage, .. } => stage,
            Error::GridCoverage { .. } => "husimi grid",
            Error::BasisMismatch { .. } => "two-level bases",
        }
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}
