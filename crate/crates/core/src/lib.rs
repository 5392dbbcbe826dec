//! Finite-depth construction of a Cantor-type weight `w` on `[0, 1)` for which the
//! Hilbert transform violates the weak (1,1) inequality with respect to `Mw`, together
//! with exact and certified numerical checks of every step of the argument.
//!
//! * [`triadic`]: exact triadic intervals and the collections `K_i`, `J_i`.
//! * [`measure`]: step measures and the recursive construction of `w_N` with its sign table.
//! * [`operators`]: certified principal-value Hilbert transform, exact maximal functions,
//!   quadrature oracles and a fast floating-point evaluator.
//! * [`verify`]: the six-term decomposition, the comparison inequalities, growth ratios and
//!   the end-to-end demonstration pipeline.
//!
//! Exact scalars are [`rug::Rational`]; log-bearing scalars are [`ball::CertifiedValue`].

pub mod ball;
pub mod measure;
pub mod operators;
pub mod triadic;
pub mod verify;

pub use rug::{Integer, Rational};

pub use ball::CertifiedValue;
pub use measure::{BaseSupport, ConstructionParams, SignEntry, SignTable, StepMeasure};
pub use triadic::{Interval, Sign, TriadicInterval};

/// Errors shared by every module.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("principal value undefined at density jump x = {0}")]
    UndefinedAtJump(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("empty measure")]
    EmptyMeasure,
    #[error("quadrature did not converge: {0}")]
    QuadratureStalled(String),
}

pub type Result<T> = std::result::Result<T, Error>;
