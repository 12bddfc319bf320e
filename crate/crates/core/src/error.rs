use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes that an operation cannot combine.
    #[error("{op}: shape mismatch: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A precondition of an operation was violated.
    #[error("{op}: {detail}")]
    Contract { op: &'static str, detail: String },

    /// Malformed input file; `field` names the offending header field or section.
    #[error("parse error in {field}: {detail}")]
    Parse { field: String, detail: String },

    #[error("non-finite loss at epoch {epoch}: {value}")]
    NonFinite { epoch: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { op, detail: detail.into() }
    }

    pub(crate) fn contract(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Contract { op, detail: detail.into() }
    }

    pub(crate) fn parse(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse { field: field.into(), detail: detail.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
