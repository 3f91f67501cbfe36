use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported quadrature degree {0} (supported: 1..=8)")]
    UnsupportedQuadrature(usize),

    #[error("non-finite value of {what} at ({x}, {y})")]
    NonFinite { what: &'static str, x: f64, y: f64 },

    #[error("index ({row}, {col}) out of range for {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("linear solve missed the accuracy contract: relative residual {residual:e} > {tolerance:e}")]
    SolverContract { residual: f64, tolerance: f64 },

    #[error("incompatible charge data: mean {mean:e} is not zero")]
    IncompatibleCharge { mean: f64 },

    #[error("non-finite {field} after step {step}")]
    NonFiniteState { step: usize, field: &'static str },

    #[error("step {step} (t = {time}) failed: {source}")]
    Step {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("discrete energy needs two time levels")]
    EnergyAtLevelZero,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
