use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate axis: fitted slope vector is zero")]
    DegenerateAxis,

    #[error("feature {0} has a curved boundary and no ground-truth axis")]
    NoGroundTruthAxis(usize),

    #[error("external scorer did not answer request {request} within {waited_ms} ms")]
    ScorerTimeout { request: String, waited_ms: u128 },

    #[error("scorer protocol error: {0}")]
    Protocol(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    TrainingDiverged { epoch: usize, batch: usize },

    #[error("missing artifact {path}: run `{producer}` first")]
    MissingArtifact { path: PathBuf, producer: &'static str },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Singular(_) => "singular-system",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::DegenerateAxis => "degenerate-axis",
            Error::NoGroundTruthAxis(_) => "no-ground-truth-axis",
            Error::ScorerTimeout { .. } => "scorer-timeout",
            Error::Protocol(_) => "protocol",
            Error::Format(_) => "format",
            Error::EmptyDataset(_) => "empty-dataset",
            Error::TrainingDiverged { .. } => "training-diverged",
            Error::MissingArtifact { .. } => "missing-artifact",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
