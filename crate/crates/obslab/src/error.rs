use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid geometric input (separation violated, ball too large, ...).
    #[error("geometry: {0}")]
    Geometry(String),

    /// An obstacle or cutoff is too coarse for the grid.
    #[error("resolution guard violated: {msg} (need n >= {required_n})")]
    Resolution { msg: String, required_n: usize },

    /// Invalid experiment configuration.
    #[error("config: {0}")]
    Config(String),

    /// An iterative kernel failed to converge.
    #[error("solver: {0}")]
    Solver(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
