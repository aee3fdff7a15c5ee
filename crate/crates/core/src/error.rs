use thiserror::Error;

/// Errors raised by graph construction, geometry, simulation and analysis.
///
/// Vertex indices are stored 0-based and displayed 1-based.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph contains a directed cycle")]
    NotADag,

    #[error("invalid formation: {0}")]
    InvalidFormation(String),

    #[error("cannot project onto the complement of a zero vector")]
    ZeroVector,

    #[error("a bearing target is required for this matrix")]
    MissingTarget,

    #[error("formations are defined on different graphs or dimensions")]
    GraphMismatch,

    #[error("degenerate formation: agents {} and {} coincide", .0 + 1, .1 + 1)]
    DegenerateFormation(usize, usize),

    #[error("bearing target has no entry for edge ({}, {})", .0 + 1, .1 + 1)]
    TargetMissingEdge(usize, usize),

    #[error("invalid bearing target: {0}")]
    InvalidTarget(String),

    #[error("graph is not connected")]
    DisconnectedGraph,

    #[error("nu must be positive, got {0}")]
    NonPositiveNu(f64),

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("bound is undefined: {0}")]
    UndefinedBound(String),

    #[error("graph has no Hamiltonian cycle")]
    NoHamiltonianCycle,

    #[error("{0} vertices exceeds the exhaustive search limit of {1}")]
    TooLarge(usize, usize),

    #[error("foci are collinear and the minimizer is a segment")]
    CollinearDegenerate {
        /// Segment endpoint closest to the centroid of the foci.
        endpoint: Vec<f64>,
        segment: (Vec<f64>, Vec<f64>),
    },

    #[error("no finite equilibrium: |v*| = {norm} is not below the number of foci {k}")]
    Infeasible { norm: f64, k: usize },

    #[error("non-finite state at t = {0}")]
    NumericalFailure(f64),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("unknown reproduction name `{0}`")]
    UnknownName(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
