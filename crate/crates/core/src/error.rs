use thiserror::Error;

/// Errors raised by the engines and the generic scheme interface.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("scheme not found: {0}")]
    NotFound(String),
}

impl CryptoError {
    pub(crate) fn invalid(what: &str, expected: usize, got: usize) -> Self {
        CryptoError::InvalidArgument(format!("{what}: expected {expected} bytes, got {got}"))
    }
}

/// `.rsp` parse failure, located by 1-based line number.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct KatParseError {
    pub line: usize,
    pub message: String,
}

/// Faults raised while running a job on a processing element.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("no processing element {0}")]
    NotFound(String),
    #[error("{0} is software-only and never dispatched to a device")]
    SoftwareOnly(String),
    #[error("job arguments do not match operation of {0}")]
    ArgumentMismatch(String),
    #[error("{pe} did not complete within {timeout_ms} ms")]
    Timeout { pe: String, timeout_ms: u64 },
    #[error(transparent)]
    Engine(#[from] CryptoError),
}

/// Problems with calibration/resource datasets and report inputs.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("duplicate entry for {0}")]
    Duplicate(String),
    #[error("negative value in {column} for {key}")]
    Negative { key: String, column: String },
    #[error("unexpected header: expected `{expected}`, got `{got}`")]
    Header { expected: String, got: String },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("dataset integrity check failed: {0}")]
    Integrity(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
