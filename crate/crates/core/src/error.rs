use thiserror::Error;

/// Errors raised by the simulator and the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} of {requested} exceeds the configured cap of {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("Krylov propagation did not converge at tau = {tau}: residual estimate {residual:e}")]
    KrylovNotConverged { tau: f64, residual: f64 },

    #[error("no crossing of the return probabilities in the supplied range")]
    NoCrossing,

    #[error("fitted lines are parallel; intersection undefined")]
    DegenerateIntersection,

    #[error("insufficient points for {what}: need {needed}, found {found}")]
    InsufficientPoints {
        what: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("all probabilities are zero; no rate function is defined")]
    NoRateDefined,

    #[error("mean spin length {length:e} is too small to define a direction")]
    UndefinedDirection { length: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("unknown measurement axis `{0}`")]
    UnknownAxis(char),

    #[error("estimator requires an all-x measurement record")]
    WrongBasis,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
