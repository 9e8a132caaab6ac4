use thiserror::Error;

/// Errors raised by measure construction, operator evaluation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel is singular at the origin; z must be nonzero")]
    SingularAtOrigin,

    #[error("integral over ({lo}, {hi}) of order {order} diverges across the origin")]
    DivergentMoment { lo: f64, hi: f64, order: u8 },

    #[error("point x={x} is outside the admissible domain: {reason}")]
    OutOfDomain { x: f64, reason: String },

    #[error("the equation does not hold at the boundary when the strong symmetric part is present (c = 1)")]
    BoundarySingular,

    #[error("iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("linear system is singular or ill-conditioned: {0}")]
    SingularSystem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
