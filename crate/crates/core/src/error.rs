use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("point {point:?} leaves the chart")]
    ChartExit { point: Vec<f64> },

    #[error("parallel transport lost unitarity (defect {defect:e}); refine the step")]
    TransportDrift { defect: f64 },

    #[error("path has no stored increments")]
    MissingIncrements,

    #[error("all {0} paths were capped")]
    AllPathsCapped(usize),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("no samples inside the density window")]
    EmptyWindow,

    #[error("point is not on the boundary (phi = {phi:e})")]
    NotOnBoundary { phi: f64 },

    #[error("point is outside the closed domain (phi = {phi:e})")]
    OutsideDomain { phi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
