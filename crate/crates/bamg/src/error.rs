use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("row {0} has zero l1 norm and cannot be normalized")]
    DegenerateRow(usize),

    #[error("quadratic form <Ax,x> = {0} is negative; matrix is not positive definite")]
    Indefinite(f64),

    #[error("zero denominator in Rayleigh quotient")]
    DegenerateVector,

    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),

    #[error("X X^T is singular; constraint matrix is rank deficient")]
    SingularProjection,

    #[error("test-vector trace at point {0} is zero; algebraic distance undefined")]
    UndefinedDistance(usize),

    #[error("F-point {0} has no interpolation candidates")]
    IsolatedPoint(usize),

    #[error("Gram operator is numerically singular: {0}")]
    GramDegenerate(String),

    #[error("coarsening stagnated: {0}")]
    Stagnation(String),

    #[error("coarsest-level factorization failed: {0}")]
    SingularCoarse(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("grid does not resolve the coefficient tiling: {0}")]
    Resolution(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
