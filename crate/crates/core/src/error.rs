use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("dimension mismatch: ℍ^{left} vs ℍ^{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("horizontal part must have even positive length, got {0}")]
    BadHorizontalLength(usize),
    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(String),
    #[error("ball radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("the group dimension n must be at least 1")]
    ZeroDimension,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("expression is singular at the identity")]
    SingularPoint,
    #[error("field index {index} out of range 0..{count}")]
    FieldIndex { index: usize, count: usize },
    #[error("multi-index length {got} does not match 2n+1 = {expected}")]
    IndexLength { got: usize, expected: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("subdivision budget exhausted: value {value} with error estimate {error_estimate} after {evaluations} evaluations")]
    Budget { value: f64, error_estimate: f64, evaluations: u64 },
    #[error("kernel exponent {beta} is not locally integrable in homogeneous dimension {q}")]
    NotIntegrable { beta: f64, q: usize },
    #[error("tail exponent {gamma} must exceed the homogeneous dimension {q}")]
    TailExponent { gamma: f64, q: usize },
    #[error("invalid quadrature specification: {0}")]
    BadSpec(String),
    #[error("integrand produced a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtomError {
    #[error("invalid atom parameters: {0}")]
    Params(String),
    #[error("target index {0} is not of homogeneous degree N+1")]
    Target(String),
    #[error("Gram matrix is not positive definite (condition number {0:e})")]
    SingularGram(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("derivative of homogeneous order {degree} requested at gauge distance {distance} < 2δ = {limit} from the atom centre")]
    NearField { degree: u32, distance: f64, limit: f64 },
    #[error("no cached kernel for multi-index of degree {0} (limit 3)")]
    Uncached(u32),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Atom(#[from] AtomError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaximalError {
    #[error("invalid radial grid: {0}")]
    Grid(String),
    #[error("invalid maximal-function parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}
