use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("enthalpy value {value} outside the image ({lower}, {upper}) of the enthalpy map")]
    Range { value: f64, lower: f64, upper: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range { .. } => "range",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Numerical(_) => "numerical",
            Error::Integration(_) => "integration",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
