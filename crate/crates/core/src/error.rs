use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate form: |det| = {det:e} below threshold {threshold:e}")]
    DegenerateForm { det: f64, threshold: f64 },

    #[error("metric is not positive definite: {0}")]
    Signature(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("coordinate `{name}` at byte {offset} is out of range for a {dim}-dimensional chart")]
    CoordinateOutOfRange {
        name: String,
        offset: usize,
        dim: usize,
    },

    #[error("evaluation of {component} failed at {point:?}: {message}")]
    Eval {
        component: String,
        point: Vec<f64>,
        message: String,
    },

    #[error("operator is not positive: eigenvalue {eigenvalue:e} below {threshold:e}")]
    NotPositive { eigenvalue: f64, threshold: f64 },

    #[error("sequence invariant violated: {what} (residual {residual:e})")]
    SequenceInvariant { what: String, residual: f64 },

    #[error("invalid manifold spec: {0}")]
    InvalidSpec(String),

    #[error("unknown zoo entry `{name}`; catalog: {}", catalog.join(", "))]
    NotFound { name: String, catalog: Vec<String> },

    #[error("internal solver failure: {0}")]
    Internal(String),
}
