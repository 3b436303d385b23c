use thiserror::Error;

/// Errors raised by the summing-operator toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("requires polyhedral space: {0}")]
    RequiresPolyhedral(String),

    #[error("zero vector has no norming functional")]
    ZeroVector,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exponent identity violated: 1/p = {lhs}, sum of 1/p_j = {rhs}")]
    ExponentIdentity { lhs: f64, rhs: f64 },

    #[error("class membership violated on this family: denominator vanishes, numerator {numerator}")]
    ClassViolated { numerator: f64 },

    #[error("support set cannot dominate: constraint row {row} has positive demand and no support")]
    SupportCannotDominate { row: usize },

    #[error("no certified measure: {0}")]
    Uncertified(String),

    #[error("linear program {0}")]
    Lp(String),

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
