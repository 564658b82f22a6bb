use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("malformed JSON: {0}")]
    Parse(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("unknown scenario kind {0:?}")]
    UnknownKind(String),
    #[error("no bundled scenario or file named {0:?}")]
    NotFound(String),
    #[error("{0}")]
    Invalid(#[from] rai_core::Error),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Schema(_) => "schema",
            CliError::UnknownKind(_) => "unknown_kind",
            CliError::NotFound(_) => "not_found",
            CliError::Invalid(_) => "invalid_input",
            CliError::Io(_) => "io",
        }
    }

    /// Single-line JSON object for stderr.
    pub fn machine_line(&self) -> String {
        serde_json::json!({ "error": self.code(), "message": self.to_string() }).to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
