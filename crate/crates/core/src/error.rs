use thiserror::Error;

/// Errors raised by set operations, reduction, the solver and the pipelines built on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("pivot S[{row}][{col}] is numerically zero")]
    ZeroPivot { row: usize, col: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("the set is empty")]
    EmptySet,
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("iteration limit reached after {0} iterations")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("no separating input at horizon N = {0}")]
    NoSeparatingInput(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
