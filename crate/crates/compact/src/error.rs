use std::path::Path;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Arguments outside an operation's domain (mismatched lengths, bad signs, ranges).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A document (manifest, model, dataset) violates its schema. `path` points
    /// at the offending node, e.g. `stages[2].threshold`.
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    /// Model file written by a format version this build does not understand.
    #[error("unsupported model version {found} (this build reads version {expected})")]
    Version { found: u64, expected: u64 },

    /// A configuration that cannot produce a meaningful run.
    #[error("configuration: {0}")]
    Config(String),

    /// The fast selection score requires one shared cost across active examples.
    #[error("candidate cost varies across active examples; the full selection score is required")]
    CostNotUniform,

    /// External scores do not cover every example that is still active.
    #[error("missing external scores for {count} active examples ({ids})")]
    MissingScores { count: usize, ids: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// A state the library treats as impossible; report as a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
