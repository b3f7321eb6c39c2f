use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("attitude singularity: |theta| = {theta} too close to pi/2")]
    AttitudeSingularity { theta: f64 },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("non-finite state at t = {t:.3} s in {what}")]
    NonFinite { t: f64, what: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}
