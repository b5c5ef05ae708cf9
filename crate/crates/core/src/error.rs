use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    /// Left/right pairing collapsed: the matrix sits at (or numerically next to)
    /// an exceptional point.
    #[error("exceptional point / defective matrix: pairing overlap {overlap:.3e} below threshold")]
    Defective { overlap: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("singular matrix (pivot {pivot:.3e})")]
    Singular { pivot: f64 },

    #[error("winding undefined at phase boundary: gap {gap:.3e} at k = {k:.6}")]
    GapClosed { k: f64, gap: f64 },

    #[error("outside analytic regime: {0}")]
    OutOfRegime(String),

    #[error("maximally non-reciprocal; analytic state degenerate ({0})")]
    MaximallyNonreciprocal(String),

    #[error("normalization singular: Z^N = 1 (Z = {z_re} + {z_im}i)")]
    NormalizationSingular { z_re: f64, z_im: f64 },

    #[error("self-orthogonal mode: <L|R> = 0")]
    SelfOrthogonal,

    #[error("step size {dt:.3e} violates stability guard (dt * max|eig| = {product:.3e} >= 0.1)")]
    StepSize { dt: f64, product: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
