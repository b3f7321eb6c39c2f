use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("type error: {0}")]
    Type(String),
    #[error("unknown identifier `{0}`")]
    Unknown(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("invalid model: {0}")]
    Model(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("unknown label \"{0}\"")]
    UnknownLabel(String),
}
