use crate::instance::{EventKind, VertexId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(u64),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(VertexId, VertexId),
    #[error("vertex {vertex} has no {kind:?} event")]
    MissingEvent { vertex: VertexId, kind: EventKind },
    #[error("vertex {vertex} has more than one {kind:?} event")]
    DuplicateEvent { vertex: VertexId, kind: EventKind },
    #[error("two events share step {0}")]
    SimultaneousEvents(u64),
    #[error("vertex {0} reaches its deadline before it arrives")]
    DeadlineBeforeArrival(VertexId),
    #[error("edge ({0}, {1}): an endpoint arrives after the other endpoint's deadline")]
    FullyOnlineViolation(VertexId, VertexId),
    #[error("edge ({0}, {1}) does not cross the bipartition")]
    BipartitionViolation(VertexId, VertexId),
    #[error("bipartition has {got} flags for {n} vertices")]
    BipartitionLength { n: usize, got: usize },
    #[error("vertex {0} is not at its deadline")]
    NotAtDeadline(VertexId),
    #[error("instance is not bipartite")]
    NotBipartite,
    #[error("pour capacity {0} is outside [0, 1]")]
    CapacityOutOfRange(f64),
    #[error("water-level {0} is outside [0, 1]")]
    LevelOutOfRange(f64),
    #[error("outcome does not belong to this instance")]
    MismatchedOutcome,
    #[error("offline optimum is zero")]
    ZeroOpt,
    #[error("{name} argument {value} is outside its domain")]
    Domain { name: &'static str, value: f64 },
    #[error("adaptive quadrature did not converge (error estimate {0:e})")]
    QuadratureFailure(f64),
    #[error("root finder did not converge")]
    NoConvergence,
    #[error("transition matrix row {row} sums to {sum} >= 1")]
    NonContraction { row: usize, sum: f64 },
    #[error("instance size {requested} exceeds the limit {limit}")]
    SizeOverflow { requested: u64, limit: u64 },
    #[error("exhaustive integration needs at most {limit} vertices, got {n}")]
    TooLargeForExhaustive { n: usize, limit: usize },
    #[error("theta is not constant above tau for edge ({0}, {1})")]
    ConstancyViolation(VertexId, VertexId),
    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(VertexId, VertexId),
    #[error("rank vector has {got} entries for {n} vertices")]
    RankLength { n: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
