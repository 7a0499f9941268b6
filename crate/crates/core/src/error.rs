use alloc::string::String;

/// Errors raised by the evaluation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input violated an operation's precondition (empty sequence, bad annotation, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A token vector had zero norm, so cosine similarity is undefined.
    #[error("degenerate embedding: token {index} has a zero-norm vector")]
    DegenerateEmbedding { index: usize },
    /// The embedding provider could not produce vectors.
    #[error("embedding provider error: {0}")]
    Provider(String),
    /// Transport marginals do not sum to one or are otherwise unusable.
    #[error("infeasible transport problem: {0}")]
    Infeasible(String),
    /// A problem exceeds a configured size bound.
    #[error("capacity exceeded: {cells} cells > limit {limit}")]
    Capacity { cells: usize, limit: usize },
    /// A metric was requested that this evaluator cannot compute.
    #[error("configuration error: {0}")]
    Configuration(String),
    /// Correlation is undefined, usually because one side has zero variance.
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    /// A remote scorer or provider could not be reached.
    #[error("transport error: {0}")]
    Transport(String),
    /// A remote scorer or provider answered with something unexpected.
    #[error("protocol error: {0}")]
    Protocol(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
