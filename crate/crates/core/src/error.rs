use alloc::string::String;

use thiserror::Error;

/// Errors raised by the kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("state is not normalized (norm squared {0})")]
    Unnormalized(f64),

    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("measurement elements do not form a POVM (deviation {0:e})")]
    InvalidPovm(f64),

    #[error("USD is impossible: the two states are identical up to phase")]
    IdenticalStates,

    #[error("filtering is undefined for zero throughput")]
    ZeroThroughput,

    #[error("attack is infeasible: {0}")]
    Infeasible(String),

    #[error(
        "no point met qber_cap {qber_cap} within {evaluations} evaluations (smallest excess {smallest_excess:e})"
    )]
    SearchFailed {
        qber_cap: f64,
        /// Least `d_avg − qber_cap` seen over all candidates.
        smallest_excess: f64,
        evaluations: u64,
        /// Largest constraint residual at the least violating candidate.
        residual: f64,
    },

    #[error("basis {0} is not available in this context")]
    UnsupportedBasis(&'static str),

    #[error("operation does not support the {0} family")]
    UnsupportedFamily(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}
