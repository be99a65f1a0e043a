use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: need at least 2 intervals, got {num_intervals}")]
    InvalidMesh { num_intervals: usize },

    #[error("invalid configuration: {key}: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("parameter {coordinate} = {value} outside [{min}, {max}]")]
    OutOfRange { coordinate: String, value: f64, min: f64, max: f64 },

    #[error("viscosity must be positive, got {0}")]
    InvalidViscosity(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("singular Newton system at time step {step}")]
    NewtonBreakdown { step: usize },

    #[error("Newton iteration did not converge at time step {step} after {iterations} iterations")]
    NonConvergence { step: usize, iterations: usize },

    #[error("full solve failed for sample {sample}: {source}")]
    Snapshot { sample: usize, source: Box<Error> },

    #[error("snapshot set has rank {available}, cannot extract {requested} modes")]
    RankDeficient { requested: usize, available: usize },

    #[error("greedy selection stagnated at basis size {achieved}")]
    Stagnation { achieved: usize },

    #[error("certification unavailable at step {step}: 1/dt + C_inf = {a_inf} <= 0, decrease dt")]
    CertificationUnavailable { step: usize, a_inf: f64 },

    #[error("linear program infeasible")]
    Infeasible,

    #[error("linear program unbounded")]
    Unbounded,

    #[error("SCM data is inconsistent: {0}")]
    ScmCorrupted(String),

    #[error("SCM constraint set is empty")]
    EmptyConstraintSet,

    #[error("model is missing SCM data")]
    MissingScm,

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("incompatible model and parameters: {0}")]
    Incompatible(String),
}
