use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A WFDB header or other structured input could not be understood.
    #[error("format error: {0}")]
    Format(String),

    /// The data stream ended before the declared number of samples.
    #[error("length error: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },

    #[error("unsupported storage format {0}")]
    UnsupportedFormat(String),

    /// Text input that failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A matrix outside the SPD cone, or a numerically unusable spectrum.
    #[error("domain error: {0}")]
    Domain(String),

    /// The dispersion feature does not exist for this curvature sequence.
    #[error("undefined feature: {0}")]
    UndefinedFeature(String),

    #[error("evaluation unavailable: {0}")]
    EvaluationUnavailable(String),

    #[error("degenerate ellipse: {0}")]
    DegenerateEllipse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl Error {
    /// Prefixes the message with the position of the offending item.
    pub(crate) fn at_point(self, index: usize) -> Self {
        match self {
            Error::Domain(msg) => Error::Domain(format!("point {index}: {msg}")),
            other => other,
        }
    }

    pub(crate) fn for_source(self, source_id: &str) -> Self {
        match self {
            Error::Domain(msg) => Error::Domain(format!("{source_id}: {msg}")),
            Error::Parameter(msg) => Error::Parameter(format!("{source_id}: {msg}")),
            Error::UndefinedFeature(msg) => Error::UndefinedFeature(format!("{source_id}: {msg}")),
            other => other,
        }
    }
}
