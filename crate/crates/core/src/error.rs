use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("invalid dimension {0}: need at least 2 levels")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),

    #[error("trace must be 1, got {0}")]
    Normalization(f64),

    #[error("not a state: smallest eigenvalue {0:.3e}")]
    NotAState(f64),

    #[error("degree overflow in component {component}: residual {residual:.3e}")]
    DegreeOverflow { component: String, residual: f64 },

    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    #[error("vector field is not affine")]
    NotAffine,

    #[error("model invariant violated: {0}")]
    InvariantViolation(String),

    #[error("integration diverged at t = {time}: smallest eigenvalue {min_eigenvalue:.3e}")]
    IntegrationDiverged { time: f64, min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty limit set")]
    EmptyLimitSet,

    #[error("limit exists; use contracted_tables")]
    LimitExists,

    #[error("unknown scenario `{name}`; registered: {registered}")]
    UnknownScenario { name: String, registered: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GeomError>;
