use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("jet order {order} exceeds cap {cap}")]
    JetOrderExceeded { order: usize, cap: usize },
    #[error("expression is not homogeneous")]
    NotHomogeneous,
    #[error("pole at sample point")]
    PoleAtPoint,
    #[error("negative radicand at sample point")]
    NegativeRadicand,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator is not skew-adjoint")]
    NotSkewAdjoint,
    #[error("metric is degenerate")]
    DegenerateMetric,
    #[error("pencil of metrics is degenerate")]
    DegeneratePencil,
    #[error("jacobian of the point transformation is singular")]
    SingularJacobian,
    #[error("graded coefficient at order {order}, degree {degree} is not homogeneous")]
    NotGraded { order: usize, degree: usize },
    #[error("affinor eigenvalues coincide (semisimplicity failure)")]
    SemisimplicityFailure,
    #[error("functional is not a Casimir of the operator")]
    NotACasimir,
    #[error("no matching catalog family")]
    NoMatch,
    #[error("parameter point is not on the variety")]
    NotOnVariety,
    #[error("ansatz space too small: {0}")]
    AnsatzTooSmall(String),
    #[error("undecided: {0}")]
    Undecided(String),
    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
