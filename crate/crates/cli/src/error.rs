use thiserror::Error;

/// Configuration errors, reported before any simulation starts.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}` must be {expected}")]
    TypeError { key: String, expected: &'static str },
    #[error("missing field `{0}`")]
    MissingField(String),
    /// Two keys that cannot be given together, e.g. a swept key also fixed.
    #[error("conflicting keys: {0}")]
    Conflict(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] repcode::Error),
    #[error(transparent)]
    Statmech(#[from] statmech::StatMechError),
    #[error(transparent)]
    Continuum(#[from] continuum::ContinuumError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed result file: {0}")]
    Parse(String),
    #[error("no rows to write")]
    NoRows,
}

pub type Result<T> = std::result::Result<T, CliError>;
