use thiserror::Error;

/// Errors raised while building or evaluating copula models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("off-support evaluation at {0}")]
    OffSupport(f64),

    #[error("invalid marginal: {0}")]
    InvalidMarginal(String),

    #[error("negative binomial MLE diverges (phi → ∞); the data are not overdispersed, consider a Poisson marginal")]
    NegBinDiverges,

    #[error("basis order exceeds support size: requested {requested}, at most {max} allowed")]
    BasisOrderTooLarge { requested: usize, max: usize },

    #[error("degenerate basis at order {0}")]
    DegenerateBasis(usize),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("maximum-entropy fit did not converge after {iterations} iterations (gradient max-norm {grad_norm:.3e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("plug-in intrinsic association undefined on sparse table; use to_loglinear on the MaxEnt fit")]
    ZeroCell,

    #[error("side is not binary: {0}")]
    NotBinary(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
