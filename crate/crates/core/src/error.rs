use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode index {index} out of range (basis has {len} modes)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("fields live on different bases")]
    BasisMismatch,

    #[error("grid and basis describe different domains")]
    DomainMismatch,

    #[error("value array has length {got}, grid has {expected} nodes")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("point lies in the finite-dimensional subspace X̃ (plus-part norm {plus_norm:e})")]
    InTildeSpace { plus_norm: f64 },

    #[error("ray never meets the Nehari set: B(u,u) = {b_value:e} <= 0 with X̃ = {{0}}")]
    NoProjection { b_value: f64 },

    #[error("solver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("classification contradiction: energy {energy:e} lies in (0, c0 = {c0:e}) but the point is {found}")]
    ClassificationContradiction { energy: f64, c0: f64, found: &'static str },

    #[error("bisection bracket failure: {0}")]
    BracketFailure(String),

    #[error("infimum of the quotient sits at the boundary ({0}); λ is at or below Λ₀")]
    BoundaryInfimum(&'static str),

    #[error("radial quadrature tail bound {bound:e} exceeds {limit:e}")]
    TailBound { bound: f64, limit: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("linear solve failed (singular Hessian)")]
    SingularMatrix,
}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidParameter(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
