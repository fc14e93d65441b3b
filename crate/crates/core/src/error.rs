use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    UnknownColumn(String),
    DuplicateColumn(String),
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    /// The schema must name exactly one outcome column.
    OutcomeCount(usize),
    OutcomeNotBinary {
        column: String,
        value: f64,
    },
    NotInteger {
        column: String,
        value: f64,
    },
    /// No rows survived filtering.
    NoRows,
    AllDenominatorsZero(String),
    OutcomeNotAllowed(String),
    IdenticalVariables(String),
    NonPositiveLogValues(String),
    TooManyDistinctValues {
        column: String,
        count: usize,
        limit: usize,
    },
    TooFewVariables(usize),
    InvalidInput(String),
    InvalidParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownColumn(c) => write!(f, "unknown column `{c}`"),
            Error::DuplicateColumn(c) => write!(f, "column `{c}` already exists"),
            Error::LengthMismatch {
                column,
                expected,
                found,
            } => write!(
                f,
                "column `{column}` has {found} values, expected {expected}"
            ),
            Error::OutcomeCount(n) => {
                write!(f, "schema must declare exactly one outcome column, found {n}")
            }
            Error::OutcomeNotBinary { column, value } => {
                write!(f, "binary outcome `{column}` contains {value}, expected 0 or 1")
            }
            Error::NotInteger { column, value } => {
                write!(f, "column `{column}` is declared integer but contains {value}")
            }
            Error::NoRows => f.write_str("no rows left after filtering"),
            Error::AllDenominatorsZero(c) => write!(f, "denominator column `{c}` is all zero"),
            Error::OutcomeNotAllowed(c) => {
                write!(f, "`{c}` is the outcome and cannot be used here")
            }
            Error::IdenticalVariables(c) => {
                write!(f, "independent and conditioning variable are identical (`{c}`)")
            }
            Error::NonPositiveLogValues(c) => {
                write!(f, "log-width binning of `{c}` requires strictly positive values")
            }
            Error::TooManyDistinctValues {
                column,
                count,
                limit,
            } => write!(
                f,
                "column `{column}` has {count} distinct values, limit is {limit}"
            ),
            Error::TooFewVariables(n) => {
                write!(f, "need at least 2 non-outcome variables, got {n}")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
