use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("message must contain at least one bit")]
    EmptyMessage,

    #[error("effective noise variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("candidate list explosion: {gamma} candidates exceed the cap of {cap}")]
    ListExplosion { gamma: u64, cap: u64 },

    #[error("selection unit is missing the report of base station {0}")]
    MissingReport(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape {
            context,
            expected,
            actual,
        })
    }
}
