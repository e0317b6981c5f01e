use thiserror::Error;

/// Errors raised while validating or loading a scenario.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("malformed scenario document: {0}")]
    Parse(#[from] serde_json::Error),
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Name of the offending field, when the error is tied to one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::Parse(_) => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("link ({0}, {1}) already exists")]
    DuplicateLink(usize, usize),
    #[error("link endpoints must differ, got ({0}, {0})")]
    SelfLoop(usize),
    #[error("cell {cell} is outside the {cells}-cell grid")]
    UnknownCell { cell: usize, cells: usize },
    #[error("link ({a}, {b}): {reason}")]
    BadAttribute { a: usize, b: usize, reason: String },
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("origin total {origins} and destination total {destinations} differ")]
    Imbalanced { origins: f64, destinations: f64 },
    #[error("marginal lengths ({origins}, {destinations}) do not match {cells} zones")]
    Dimension {
        origins: usize,
        destinations: usize,
        cells: usize,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("initial density is zero everywhere; check center amplitudes and gradients")]
    ZeroDensity,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
