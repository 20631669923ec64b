use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{label} is not invertible on [0, inf)")]
    NotInvertible { label: String },

    #[error("no finite bracket for the inverse of {label} at u = {u}")]
    BracketFailure { label: String, u: f64 },

    #[error("complementary supremum is unbounded at s = {s} (objective still increasing at t = {t_max})")]
    UnboundedSup { s: f64, t_max: f64 },

    #[error("convexity violated: midpoint of ({s}, {t}) exceeds the chord by {gap}")]
    ConvexityViolation { s: f64, t: f64, gap: f64 },

    #[error("quadrature did not converge on [{lo}, {hi}]: {reason}")]
    QuadratureNonConvergence { lo: f64, hi: f64, reason: String },

    #[error("measure has zero total mass")]
    ZeroTotalMass,

    #[error("gauge norm bracket expansion exceeded 2^60 (norm reported as +inf)")]
    ExpansionLimit,

    #[error("non-finite intermediate value: {0}")]
    NonFinite(String),

    #[error("hypothesis failed: {0}")]
    HypothesisViolation(String),

    #[error("bad split point alpha = {alpha}: {reason}")]
    BadAlpha { alpha: f64, reason: String },

    #[error("integrand is not integrable on [{lo}, {hi}]")]
    NonIntegrableIntegrand { lo: f64, hi: f64 },

    #[error("test function {id} has zero derivative norm but deviation {lhs}")]
    DegenerateTestFunction { id: String, lhs: f64 },

    #[error("bound violated by {id}: ratio {ratio} > bound {bound} (+ tol {tol})")]
    BoundViolation { id: String, ratio: f64, bound: f64, tol: f64 },

    #[error("dual test function {index} lies outside the unit ball (norm {norm})")]
    DualOutsideBall { index: usize, norm: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
