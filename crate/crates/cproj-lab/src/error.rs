use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("metric is degenerate at {point:?} (|det g| = {det:e})")]
    DegenerateMetric { point: Vec<f64>, det: f64 },
    #[error("tensor rank ({0}, {1}) is not supported by this operation")]
    UnsupportedRank(usize, usize),
    #[error("path leaves the chart domain at {0:?}")]
    PathLeavesDomain(Vec<f64>),
    #[error("jet order {0} requested, the maximum is 3")]
    OrderTooHigh(usize),
    #[error("point has {got} coordinates, the chart has dimension {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("point has non-finite coordinates: {0:?}")]
    NonFinitePoint(Vec<f64>),
    #[error("metric is not hermitian with respect to J (residual {0:e})")]
    NotHermitian(f64),
    #[error("solution is degenerate: |det(g⁻¹A)| = {0:e}")]
    DegenerateSolution(f64),
    #[error("metric is not Einstein (residual {0:e})")]
    NotEinstein(f64),
    #[error("λ vanishes on the whole sample")]
    LambdaVanishes,
    #[error("B = 0, but this construction needs B ≠ 0")]
    BZero,
    #[error("lift needs B = -1, the solution has B = {0}")]
    WrongB(f64),
    #[error("the solution carries no constant B")]
    MissingB,
    #[error("the solution carries no μ")]
    MissingMu,
    #[error("complex dimension {0} is too small for this conversion (need 2n > 4)")]
    DimensionTooSmall(usize),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("curve velocity vanishes at sample {0}")]
    ZeroVelocity(usize),
    #[error("holonomy count did not stabilize: {0:?}")]
    NonStabilized(Vec<usize>),
    #[error("complex dimension {0} is outside the supported range")]
    BadDimension(usize),
    #[error("no realization for n = {n}, k = {k}, ℓ = {l} in {mode} mode")]
    Infeasible { n: usize, k: usize, l: usize, mode: String },
    #[error("unknown catalog key '{0}'")]
    UnknownKey(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("least-squares fit is underdetermined: {0}")]
    Underdetermined(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
