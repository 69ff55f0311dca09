use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: determinant {0} is not 1")]
    InvalidMatrix(String),
    #[error("matrix is not loxodromic, no axis")]
    NoAxis,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("segment passes within {margin:e} of a zero at {zero}")]
    SingularSegment { zero: String, margin: f64 },
    #[error("path violates the zero standoff: {0}")]
    SingularPath(String),
    #[error("degenerate differential: {0}")]
    DegenerateDifferential(String),
    #[error("unfolding depth {0} exceeded")]
    DepthExceeded(usize),
    #[error("step size collapsed to {0:e}")]
    Stiffness(f64),
    #[error("differential is not invariant under the deck element (defect {0:e})")]
    NotEquivariant(f64),
    #[error("metric vanishes at {0}")]
    MetricZero(String),
    #[error("developing map is not immersive (f' = 0)")]
    DegenerateJet,
    #[error("empty generator set")]
    EmptyGenerators,
    #[error("degenerate minimum: {0}")]
    DegenerateMinimum(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
