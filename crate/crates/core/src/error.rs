use thiserror::Error;

/// Everything that can go wrong when evaluating fields, building systems or integrating.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate constraint: a(x) vanishes at {0:?}")]
    DegenerateConstraint([f64; 3]),
    #[error("degenerate metric: det G = {0}")]
    DegenerateMetric(f64),
    #[error("degenerate gradient at {0:?}")]
    DegenerateGradient([f64; 3]),
    #[error("degenerate field: {0}")]
    DegenerateField(String),
    #[error("velocity not tangent to the constraint (residual {0:e})")]
    NonTangent(f64),
    #[error("chart degeneracy: {0}")]
    ChartDegeneracy(String),
    #[error("turning point of a radicand near {0}")]
    TurningPoint(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),
    #[error("ill-posed constraint: (a, M^-1 a) = 0")]
    IllPosedConstraint,
    #[error("constraint violated (residual {0:e})")]
    ConstraintViolated(f64),
    #[error("identity check failed: {0}")]
    IdentityMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arr(v: &crate::Vec3) -> [f64; 3] {
    [v[0], v[1], v[2]]
}
