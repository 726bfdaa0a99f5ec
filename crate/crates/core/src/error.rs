use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pose graph is disconnected ({} components)", components.len())]
    DisconnectedGraph { components: Vec<Vec<usize>> },

    #[error("node index {index} out of range for a graph with {node_count} nodes")]
    IndexOutOfRange { index: usize, node_count: usize },

    #[error("edge {edge} is a self-loop on node {node}")]
    SelfLoop { edge: usize, node: usize },

    #[error("pose graph must have at least {min} nodes, got {got}")]
    TooFewNodes { got: usize, min: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("vector of odd length {0} cannot be complexified")]
    OddLength(usize),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix has no eigenvalue below the zero threshold {threshold:e}")]
    EmptyNullSpace { threshold: f64 },

    #[error("input matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsdInput { min_eigenvalue: f64 },

    #[error("penalized matrix has no zero eigenvalue (smallest {smallest:e}); dual solve failed")]
    NoZeroEigenvalue { smallest: f64 },

    #[error("rotation entries of the kernel vector do not share a modulus (relative spread {spread:e})")]
    InconsistentModulus { spread: f64 },

    #[error("kernel vector has vanishing rotation modulus")]
    ZeroModulus,

    #[error("rotation entry {index} has zero modulus and cannot be normalized")]
    ZeroRotationEntry { index: usize },

    #[error("null-space program is unbounded: rotation rows of the basis are rank deficient")]
    UnboundedObjective,

    #[error("node {node} is not a chain node (needs exactly two incident edges to distinct neighbors)")]
    NotAChainNode { node: usize },

    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown tag `{tag}`")]
    UnknownTag { line: usize, tag: String },

    #[error("line {line}: duplicate vertex id {id}")]
    DuplicateVertex { line: usize, id: i64 },

    #[error("line {line}: non-identity information matrix")]
    NonIdentityInformation { line: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}
