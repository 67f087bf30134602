//! Error taxonomy shared by all modules.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A non-finite or otherwise malformed input value.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation invoked for a drift parameter outside its regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// A field or wave grid that does not cover the requested evaluation.
    #[error("coverage error: {0}")]
    Coverage(String),

    /// A quantity below the numerical precision budget of its representation.
    #[error("precision error: {0}")]
    Precision(String),

    /// A missing or inconsistent configuration value.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A numerical-scheme self-check failure (monotonicity, range, stability).
    #[error("scheme error: {0}")]
    Scheme(String),

    /// A simulation exceeded its population cap; partial statistics attached.
    #[error("population cap {cap} exceeded at t={at_time:.6} ({created} particles created)")]
    Capped {
        cap: usize,
        at_time: f64,
        created: usize,
    },

    /// Artifact integrity violation (hash mismatch, malformed snapshot).
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error represents a capped (partial-result) run.
    pub fn is_capped(&self) -> bool {
        matches!(self, Error::Capped { .. })
    }
}
