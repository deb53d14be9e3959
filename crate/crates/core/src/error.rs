use alloc::string::String;

/// Errors raised by the symbol calculus and its numerical back ends.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),
    #[error("unsupported symbol: {0}")]
    UnsupportedSymbol(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
