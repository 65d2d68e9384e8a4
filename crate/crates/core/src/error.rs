use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("direction has norm {norm:e}, below the 1e-9 floor")]
    ZeroVector { norm: f64 },

    #[error("matrix is not Hermitian: {0}")]
    NonHermitianInput(String),

    #[error("time grid is invalid: {0}")]
    InvalidGrid(String),

    #[error("distributions live on different time grids")]
    GridMismatch,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid direction family: {0}")]
    InvalidFamily(String),

    #[error("direction {0:?} is not listed in the family")]
    DirectionNotFound([f64; 3]),

    #[error("invalid POVM: {}", .0.join("; "))]
    InvalidPovm(Vec<String>),

    #[error("need at least two antipodal direction pairs, found {0}")]
    TooFewDirections(usize),

    #[error("symmetry axis missing: {0}")]
    MissingAxis(String),

    #[error("no listed direction is perpendicular to the symmetry axis")]
    MissingPerpendicularDirection,

    #[error("fit grid has no bins")]
    InfeasibleGrid,

    #[error("problem too large for the brute-force oracle: {0}")]
    ProblemTooLarge(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{flagged} of {total} trajectories came too close to a node of the wavefunction")]
    NodeProximity { flagged: usize, total: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
