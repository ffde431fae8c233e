use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by graph analysis, mean evaluation, iteration, and the
/// stochastic-matrix machinery.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("edge ({from}, {to}) references a vertex outside 0..{vertex_count}")]
    InvalidEdge {
        from: usize,
        to: usize,
        vertex_count: usize,
    },

    #[error("{labels} labels given for {vertex_count} vertices")]
    LabelCountMismatch { labels: usize, vertex_count: usize },

    #[error("vertex {vertex} outside 0..{vertex_count}")]
    InvalidVertex { vertex: usize, vertex_count: usize },

    #[error("instance too large for oracle: {vertex_count} vertices exceeds cap {cap}")]
    OracleCapExceeded { vertex_count: usize, cap: usize },

    #[error("vertex set does not induce an irreducible subgraph")]
    ComponentNotIrreducible,

    #[error("component has no cycle, so its period is undefined")]
    ComponentHasNoCycle,

    #[error("graph is not ergodic: {reason}")]
    NotErgodic { reason: String },

    #[error("no all-ones power up to the primitivity bound {bound}; input cannot be ergodic")]
    WalkThresholdOverflow { bound: usize },

    #[error("root graph is connected; the two-sided partition needs at least two root components")]
    RootConnected,

    #[error("invalid mean: {0}")]
    InvalidMean(String),

    #[error("mean of arity {expected} applied to {actual} arguments")]
    ArityMismatch { expected: usize, actual: usize },

    #[error("argument {value} at position {index} outside the mean's domain: {reason}")]
    MeanDomain {
        index: usize,
        value: f64,
        reason: String,
    },

    #[error("invalid averaging system: {0}")]
    InvalidSystem(String),

    #[error("coordinate {index} = {value} lies outside the system domain {domain}")]
    DomainViolation {
        index: usize,
        value: f64,
        domain: String,
    },

    #[error("input vector has length {actual}, system has {expected} coordinates")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("coordinate {coordinate} became non-finite at step {step}")]
    NumericFailure { step: usize, coordinate: usize },

    #[error("no verdict within the iteration budget of {max_iter} steps")]
    BudgetExhausted { max_iter: usize },

    #[error("iteration settled into a period-{period} cycle instead of a common limit")]
    OscillationDetected { period: usize },

    #[error(
        "root of the incidence graph is not ergodic ({reason}); \
         no unique invariant mean exists"
    )]
    NonErgodicRoot { reason: String },

    #[error("root of the incidence graph is ergodic; the invariant mean is unique and no non-uniqueness witness exists")]
    ErgodicRoot,

    #[error("no fixed point certified: best residual {residual:e} after polish")]
    WitnessNotCertified { residual: f64 },

    #[error("witness values must be distinct points of the domain, got gamma = {gamma}, delta = {delta}")]
    InvalidWitnessValues { gamma: f64, delta: f64 },

    #[error("trace records {actual} states, operation needs at least {needed}")]
    InsufficientTrace { needed: usize, actual: usize },

    #[error("mean at node {index} is not a weighted arithmetic mean or projection")]
    NotAffine { index: usize },

    #[error("row {row} sums to {sum}, not 1")]
    NotRowStochastic { row: usize, sum: f64 },

    #[error("matrix entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("matrix power limit does not exist: root component {{{component}}} has period {period}")]
    NoMatrixLimit { component: String, period: u64 },

    #[error("linear system is singular or badly scaled")]
    SingularSystem,

    #[error("block is not irreducible and aperiodic, no unique stationary distribution")]
    BadStochasticBlock,

    #[error("structural and repeated-squaring limits disagree by {difference:e} (tolerance {tol:e})")]
    LimitCrossCheckFailed { difference: f64, tol: f64 },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}
