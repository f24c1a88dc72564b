use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("half-plane intersection is unbounded")]
    Unbounded,
    #[error("vertex list is empty")]
    EmptyVertexList,
    #[error("vertices are not in convex counterclockwise position")]
    NotConvex,
    #[error("non-finite coordinate or offset")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapError {
    #[error("cap intersection is empty")]
    EmptyCap,
    #[error("invalid angle set: {0}")]
    InvalidAngleSet(String),
    #[error("height vector has {got} entries, expected {expected}")]
    HeightLength { expected: usize, got: usize },
    #[error("polygon violates cap condition: {0}")]
    NotACap(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error("line search underflow without progress")]
    Diverged,
    #[error("schedule must be strictly increasing powers of two")]
    BadSchedule,
    #[error("invalid options: {0}")]
    BadOptions(String),
    #[error(transparent)]
    Cap(#[from] CapError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArmError {
    #[error("negative input {0}")]
    NegativeInput(f64),
    #[error("breakpoints must run from 0 to π/2, strictly increasing, with finite values")]
    BadBreakpoints,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("invalid angle range ({0}, {1})")]
    InvalidAngleRange(f64, f64),
    #[error("tail body is empty")]
    EmptyTail,
    #[error("curve point at t = {0} is off the supporting line by {1}")]
    OffLine(f64, f64),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error(transparent)]
    Cap(#[from] CapError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AngleBoundError {
    #[error("value {0} outside the admissible range")]
    OutOfRange(f64),
    #[error("cap area {0} is below 2.2")]
    PreconditionArea(f64),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid field `{field}`: {msg}")]
    Field { field: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
