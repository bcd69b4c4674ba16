use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("unknown fixture `{0}` (expected complete8, star8 or tree8)")]
    UnknownFixture(String),

    #[error("malformed edge list at line {line}: {reason}")]
    EdgeListFormat { line: usize, reason: String },

    #[error("average shortest path undefined: no connected node pair")]
    NoConnectedPair,

    #[error("all centrality values are zero")]
    ZeroCentrality,

    #[error("exact solver supports at most {max} nodes, got {n}")]
    TooManyNodes { n: usize, max: usize },

    #[error("cannot split isolated node {0}")]
    IsolatedNode(usize),

    #[error("contact coefficients undefined: {0}")]
    UndefinedCoefficients(&'static str),

    #[error("sample counts differ: {left} vs {right}")]
    SampleMismatch { left: usize, right: usize },

    #[error("graph exhausted after removing {removed} edges without controlling pandemics")]
    GraphExhausted { removed: usize },

    #[error("pandemic risk not controlled after {splits} splits")]
    SplitsExhausted { splits: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
