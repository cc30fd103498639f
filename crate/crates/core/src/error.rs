use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("cartesian product requires two non-empty operands")]
    EmptyOperand,
    #[error("products of product graphs are not supported")]
    NestedProduct,
    #[error("duplicate vertex label `{0}`")]
    DuplicateVertex(String),
    #[error("edge endpoint `{0}` is not a vertex")]
    UnknownEndpoint(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("parallel edge between `{0}` and `{1}`")]
    ParallelEdge(String, String),
    #[error("graph is disconnected: no path from `{from}` to `{to}`")]
    Disconnected { from: String, to: String },
    #[error("malformed graph description: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("acyclic factor violates the acyclic property (it contains a cycle)")]
    AcyclicPropertyViolation,
    #[error("acyclic factor must be connected: {0}")]
    DisconnectedAcyclicFactor(String),
    #[error("connectivity factor violates the connectivity property (it is not complete)")]
    ConnectivityPropertyViolation,
    #[error("connectivity factor labels must be the integers 0..{expected}, found `{found}`")]
    IndexPropertyViolation { expected: usize, found: String },
    #[error("unknown broker `{0}`")]
    UnknownBroker(String),
    #[error("broker `{broker}` already belongs to cluster {cluster}")]
    OwnCluster { broker: String, cluster: usize },
    #[error("cluster index {index} out of range (cluster count {count})")]
    ClusterOutOfRange { index: usize, count: usize },
    #[error("`{0}` and `{1}` are not adjacent")]
    NotAdjacent(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContentError {
    #[error("ordering operator `{op}` on `{attribute}` requires a numeric value")]
    NonNumericOrdering { attribute: String, op: String },
    #[error("subscription needs at least one predicate")]
    EmptyFilter,
    #[error("duplicate predicate `{attribute} {op}` in one subscription")]
    DuplicatePredicate { attribute: String, op: String },
    #[error("duplicate attribute `{0}` in notification")]
    DuplicateAttribute(String),
    #[error("cannot parse `{text}`: {reason}")]
    Syntax { text: String, reason: String },
    #[error("bit index {index} out of range for width {width}")]
    BitOutOfRange { index: usize, width: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("subscription {0} is already stored at broker {1}")]
    DuplicateSubscription(String, String),
    #[error("BID {bid} has no routing table entry at broker {broker}")]
    UnknownBid { bid: String, broker: String },
    #[error("broker {broker} received a CBV_p with its own cluster bit {cluster} set")]
    OwnClusterBit { broker: String, cluster: usize },
    #[error("algorithm {algorithm} invoked in the wrong routing mode")]
    WrongMode { algorithm: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("run did not quiesce within {events} events (tick {tick}); non-empty queues: {snapshot}")]
    Timeout { events: u64, tick: u64, snapshot: String },
    #[error("unknown link {0}")]
    UnknownLink(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Content(#[from] ContentError),
}
