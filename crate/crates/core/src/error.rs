use thiserror::Error;

/// Errors raised anywhere in the threshold pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size {value} outside supported range {min}..={max} for {what}")]
    Size {
        what: &'static str,
        value: u64,
        min: u64,
        max: u64,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("projected subspace is empty ({context})")]
    EmptySubspace { context: String },
    #[error("eigensolver did not converge after {applications} operator applications (best residual {best_residual:e})")]
    NotConverged {
        applications: usize,
        best_residual: f64,
    },
    #[error("no admissible decomposition for type {alpha}: {details}")]
    NoAdmissibleDecomposition { alpha: String, details: String },
    #[error("all branching pairs failed for {decomposition}: {failures:?}")]
    AllPairsFailed {
        decomposition: String,
        failures: Vec<String>,
    },
    #[error("projected trial function vanishes ({0})")]
    ZeroTrial(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Size { .. }
                | Error::Shape(_)
                | Error::Domain(_)
                | Error::InvalidSystem(_)
                | Error::Config(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
