use thiserror::Error;

/// Errors raised by the fitting engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("index {index} out of range (valid: 0..{len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    OutsideDomain { value: f64, lo: f64, hi: f64 },

    #[error("spaces are not nested: {0}")]
    NotNested(String),

    #[error("polynomial degree {poly} exceeds spline degree {spline}")]
    DegreeViolation { poly: usize, spline: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("least squares system is underdetermined ({rows} rows < {cols} columns)")]
    Underdetermined { rows: usize, cols: usize },

    #[error("least squares matrix is numerically rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no data found within {enlargements} enlarged balls")]
    EmptyNeighborhood { enlargements: usize },

    #[error("function at level {level} is not active")]
    InactiveFunction { level: usize },

    #[error("level {level} out of range (hierarchy has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),

    #[error("refinement needs {levels} levels but at most {max} are allowed")]
    TooManyLevels { levels: usize, max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

pub type Result<T> = std::result::Result<T, Error>;
