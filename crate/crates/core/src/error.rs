use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("infinite product did not converge within {cap} terms (last factor {last})")]
    NonConvergence { cap: usize, last: f64 },
    #[error("singular parameter: {0}")]
    SingularParameter(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("path order violated: {0}")]
    PathOrder(String),
    #[error("state space of {states} configurations exceeds cap {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },
    #[error("transition matrix is not irreducible")]
    NotIrreducible,
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("width {0} must be odd")]
    EvenWidth(usize),
    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("representation residual {residual:e} exceeds tolerance {tol:e}")]
    RepConstructionFailure { residual: f64, tol: f64 },
    #[error("truncation {dim} below exactness threshold {needed}")]
    WindowTooSmall { dim: usize, needed: usize },
    #[error("normalizer vanishes")]
    ZeroNormalizer,
    #[error("{0} distinct times requested, at most 3 supported")]
    TooManyTimes(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("phase boundary: {0}")]
    PhaseBoundary(String),
    #[error("negative integrand at y = {0}")]
    NegativeIntegrand(f64),
    #[error("empty run: no samples collected")]
    EmptyRun,
}
