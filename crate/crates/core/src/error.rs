use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid volatility band: {0}")]
    InvalidBand(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("empty scenario set")]
    EmptyScenarioSet,
    #[error("non-finite payoff sample at path {path} (scenario {scenario})")]
    NonFinitePayoff { scenario: usize, path: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric positive semidefinite: {0}")]
    NotPsd(String),
    #[error("CFL condition violated: dt = {dt:e} exceeds the stability limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite value in PDE sweep at step {step}")]
    PdeBlowUp { step: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("elements live on different measure spaces")]
    SpaceMismatch,
    #[error("band limit exceeded: requested {requested}, limit {limit}")]
    BandLimit { requested: usize, limit: usize },
    #[error("partition and scenario are misaligned: {0}")]
    Misaligned(String),
    #[error("integrand for slice {slice} read slice {requested}, which is not strictly earlier")]
    Adaptedness { slice: usize, requested: usize },
    #[error("inclusion-exclusion supports at most 4 sets, got {0}")]
    TooManySets(usize),
    #[error("initial data has non-cosine content of size {0:e}")]
    NonCosineContent(f64),
    #[error("test function violates the boundary conditions: {0}")]
    BoundaryCondition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error in `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
