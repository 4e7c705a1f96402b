use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to be
/// echoed back to a user verbatim.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("polynomial is not harmonic: Laplacian has coefficient {coefficient} on monomial {monomial}")]
    NotHarmonic { monomial: String, coefficient: f64 },

    #[error("cannot parse field spec at `{token}`: {reason}")]
    Spec { token: String, reason: String },

    #[error("zero L2 mass on B_{radius}({center:?}); blow-up is undefined")]
    ZeroMass { center: Vec<f64>, radius: f64 },

    #[error(
        "sheet continuation is ambiguous at node {node} (gap {gap:e}); refine the trace sampling"
    )]
    AmbiguousContinuation { node: usize, gap: f64 },

    #[error("bent weight violates its interval specification: {0}")]
    BentWeight(String),

    #[error("finite-difference step too large: {0}")]
    StepSize(String),

    #[error("boundary data: {0}")]
    Boundary(String),
}

pub type Result<T> = std::result::Result<T, Error>;
