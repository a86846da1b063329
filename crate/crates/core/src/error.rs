use thiserror::Error;

/// Everything that can go wrong while building a scenario or running it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("edge ({0},{1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0},{1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("edge ({i},{j}) references a node outside the {n} agents")]
    NodeOutOfRange { i: usize, j: usize, n: usize },
    #[error("graph is disconnected: node {0} is unreachable from the first node")]
    Disconnected(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix has no eigenvalue above the zero threshold")]
    NoPositiveEigenvalue,
    #[error("formation is infeasible: edge ({i},{j}) residual {residual:.6e} exceeds tolerance")]
    Infeasible { i: usize, j: usize, residual: f64 },
    #[error("edge ({i},{j}) has |d_ij| = {norm} >= delta = {delta}, leaving no connectivity margin")]
    DisplacementTooLong {
        i: usize,
        j: usize,
        norm: f64,
        delta: f64,
    },
    #[error("initial condition violated on edge ({i},{j}): |y_i - y_j| = {length} >= margin {margin}")]
    InitialOutsideMargin {
        i: usize,
        j: usize,
        length: f64,
        margin: f64,
    },
    #[error("connectivity margin violated: edge length {length} reached pole {rho} (guard {guard:e})")]
    MarginViolation { length: f64, rho: f64, guard: f64 },
    #[error("agent {agent}: knowledge about neighbor {neighbor} dates from t={since}, cannot evaluate at t={t}")]
    StaleKnowledge {
        agent: usize,
        neighbor: usize,
        since: f64,
        t: f64,
    },
    #[error("root search failed on [{lo}, {hi}]: {reason}")]
    RootFinding { lo: f64, hi: f64, reason: String },
    #[error("{0}")]
    Parameter(String),
    #[error("simulation aborted at t={t} (agent {agent}): {source}")]
    Run {
        t: f64,
        agent: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("trace: {0}")]
    Trace(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Same error with node and agent indices shifted to 1-based numbering,
    /// matching the scenario file format.
    pub fn one_based(self) -> Self {
        match self {
            Error::SelfLoop(i, j) => Error::SelfLoop(i + 1, j + 1),
            Error::DuplicateEdge(i, j) => Error::DuplicateEdge(i + 1, j + 1),
            Error::NodeOutOfRange { i, j, n } => Error::NodeOutOfRange { i: i + 1, j: j + 1, n },
            Error::Disconnected(i) => Error::Disconnected(i + 1),
            Error::Infeasible { i, j, residual } => Error::Infeasible { i: i + 1, j: j + 1, residual },
            Error::DisplacementTooLong { i, j, norm, delta } => Error::DisplacementTooLong {
                i: i + 1,
                j: j + 1,
                norm,
                delta,
            },
            Error::InitialOutsideMargin { i, j, length, margin } => Error::InitialOutsideMargin {
                i: i + 1,
                j: j + 1,
                length,
                margin,
            },
            Error::StaleKnowledge { agent, neighbor, since, t } => Error::StaleKnowledge {
                agent: agent + 1,
                neighbor: neighbor + 1,
                since,
                t,
            },
            Error::Run { t, agent, source } => Error::Run {
                t,
                agent: agent + 1,
                source: Box::new(source.one_based()),
            },
            other => other,
        }
    }
}
