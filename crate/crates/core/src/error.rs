use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distance {0} (must be non-negative)")]
    InvalidDistance(f64),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid track: {0}")]
    InvalidTrack(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at probe {probe}{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    Numerical {
        probe: usize,
        context: Option<String>,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("operation requires the hierarchical model variant")]
    Mode,

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach chromosome context to a numerical error.
    pub fn in_chromosome(self, chrom: &str) -> Self {
        match self {
            Error::Numerical { probe, context } => Error::Numerical {
                probe,
                context: Some(match context {
                    Some(c) => format!("{chrom}: {c}"),
                    None => chrom.to_string(),
                }),
            },
            other => other,
        }
    }
}
