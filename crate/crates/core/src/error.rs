use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ambient mismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),

    #[error("eigenspaces {0} and {1} of observable `{2}` are not orthogonal")]
    OrthogonalityViolation(usize, usize, String),

    #[error("observable `{observable}`: {reason}")]
    InvalidObservable { observable: String, reason: String },

    #[error(
        "operator `{operator}` does not commute with eigenspace {eigenspace} of `{observable}`"
    )]
    CommutantViolation {
        operator: String,
        observable: String,
        eigenspace: usize,
    },

    #[error("operator {0} lies outside the commutant of the site observable")]
    NotInCommutant(usize),

    #[error("operator monoid exceeded cap {0}")]
    ClosureExceeded(usize),

    #[error("ray orbit exceeded cap {0}")]
    OrbitExceeded(usize),

    #[error("sieve enumeration exceeded cap {0}")]
    EnumerationExceeded(usize),

    #[error("lattice generation exceeded cap {0}")]
    LatticeCapExceeded(usize),

    #[error("unknown object: {0}")]
    UnknownObject(String),

    #[error("not a sub-presheaf: {0}")]
    NotSubPresheaf(String),

    #[error("not a sieve: {0}")]
    NotASieve(String),

    #[error("state has zero component in the chosen eigenspace")]
    ZeroProjection,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}
