use thiserror::Error;

/// Errors reported by the series engine, the distribution functions and the
/// samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid Wishart parameters: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A lower hypergeometric parameter makes a generalized Pochhammer symbol
    /// vanish for some partition reachable under the truncation budget.
    #[error(
        "lower parameter {parameter} has a pole at partition row {row} within degree {max_degree}"
    )]
    LowerParameterPole {
        parameter: f64,
        row: usize,
        max_degree: usize,
    },

    #[error("gamma function pole: c = {c} must exceed {threshold}")]
    GammaPole { c: f64, threshold: f64 },

    /// The truncated CDF never reaches the requested level; a larger
    /// truncation degree is needed.
    #[error("cannot bracket level {level}: truncated CDF peaks at {peak} (x = {at}); increase the truncation degree")]
    NonBracketable { level: f64, peak: f64, at: f64 },

    #[error("series did not converge: {0}")]
    NotConverged(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
