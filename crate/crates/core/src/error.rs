use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("label {0} is not -1 or +1")]
    InvalidLabel(f64),

    #[error("labels must contain both classes")]
    SingleClass,

    #[error("hessian is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("hessian diagonal entry {index} is not positive")]
    NonPositiveDiagonal { index: usize },

    #[error("upper bound must be positive, got {0}")]
    InvalidBound(f64),

    #[error("non-finite value in input")]
    NonFinite,

    #[error("iterate is infeasible: {0}")]
    Infeasible(&'static str),

    #[error("direction has nonpositive curvature sᵀHs = {0:e}")]
    NonPositiveCurvature(f64),

    #[error("direction is not a descent direction (gᵀs = {0:e})")]
    NotDescent(f64),

    #[error("model has no support vectors")]
    DegenerateModel,

    #[error("class {0:+} is absent from the dataset")]
    MissingClass(i8),

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
