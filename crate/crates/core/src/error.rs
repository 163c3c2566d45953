use std::fmt;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("unbounded support: {0}")]
    UnboundedSupport(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("incompatible experiment: {0}")]
    Incompatible(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("config error: {0}")]
    Config(ConfigErrors),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Schema error with the 1-based line it refers to, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {}: {}", l, self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<SchemaError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

macro_rules! bail_param {
    ($($arg:tt)*) => {
        return Err($crate::error::Error::InvalidParameter(format!($($arg)*)))
    };
}
pub(crate) use bail_param;
