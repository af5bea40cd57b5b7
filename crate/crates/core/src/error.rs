use core::fmt;

/// Errors produced by the library surface.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated its documented domain.
    Invalid(&'static str),
    /// Two arguments had incompatible dimensions.
    Dimension { expected: usize, got: usize },
    /// A weight entry was zero where the Laplace prior requires positivity.
    ZeroWeight(usize),
    /// The curvature matrix was singular or not positive-definite, so its
    /// log-determinant is undefined; the model is flagged, not scored.
    IndefiniteCurvature,
    /// The criterion was asked to score a model with an empty active set
    /// where the log-determinant term is undefined.
    EmptyActiveSet,
    /// Every path point was flagged, leaving no candidate for the argmin.
    NoValidCandidate,
    /// A data column had zero variance and cannot be standardized.
    ZeroVarianceColumn(usize),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(what) => write!(f, "invalid argument: {what}"),
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::ZeroWeight(j) => write!(f, "weight {j} is zero; Laplace prior degenerates"),
            Error::IndefiniteCurvature => {
                write!(f, "curvature matrix is not positive definite")
            }
            Error::EmptyActiveSet => write!(f, "active set is empty"),
            Error::NoValidCandidate => write!(f, "no valid candidate on the path"),
            Error::ZeroVarianceColumn(j) => write!(f, "column {j} has zero variance"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
