use thiserror::Error;

/// Errors raised by the physics models, the fitters and the IO layer.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no real non-negative field brings the branch onto the cavity line")]
    UnreachableResonance,

    #[error("no anti-crossing found: {0}")]
    NoAntiCrossing(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    /// The zero-field / high-field coupling pair exceeds the aligned-dipole bound.
    #[error("inconsistent coupling pair: g0/(sqrt(2) g') = {ratio} > 1")]
    InconsistentPair { ratio: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("CSV line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
