use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("input graph is not connected")]
    DisconnectedInput,
    #[error("tree edge list contains a cycle")]
    CyclicTreeInput,
    #[error("hypergrid needs at least 2 dimensions, each of size >= 2 (got {0:?})")]
    BadDimension(Vec<usize>),
    #[error("cycle needs at least 3 vertices (got {0})")]
    CycleTooShort(usize),
    #[error("graph has {n} vertices, limit for this operation is {cap}")]
    GraphTooLarge { n: usize, cap: usize },
    #[error("operation requires a tree")]
    NotATree,
    #[error("brute-force bounds too large: {0}")]
    BoundsTooLarge(String),
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    InvalidVertex { vertex: usize, n: usize },
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("ordering is not a permutation of the {0} vertices")]
    BadOrder(usize),
    #[error("occupied set must be non-empty")]
    EmptyOccupiedSet,
    #[error("rule table is not total: missing entry for set {0:#b}")]
    IncompleteTable(u64),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
