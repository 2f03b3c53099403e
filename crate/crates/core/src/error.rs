use thiserror::Error;

use crate::expr::{EvalError, OracleError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse {field}: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("precondition failed: {predicate}")]
    Gate { predicate: String },
    #[error("inadmissible input: {0}")]
    Inadmissible(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
}

impl Error {
    pub(crate) fn gate(predicate: impl Into<String>) -> Error {
        Error::Gate { predicate: predicate.into() }
    }

    /// True for errors caused by the input rather than by this library.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Inadmissible(_) | Error::Sampling(_) | Error::Oracle(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
