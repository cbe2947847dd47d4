use thiserror::Error;

/// Errors produced by the analytic and simulation routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Kummer M({a}, {b}, {z}) is not finite")]
    KummerEvaluation { a: f64, b: f64, z: f64 },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error bound {error_bound:e})"
    )]
    QuadratureNotConverged {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("series not converged after {terms} terms (partial sum {partial_sum:e})")]
    SeriesNotConverged { partial_sum: f64, terms: usize },

    #[error("evaluation produced a non-finite value: {0}")]
    NonFinite(String),

    #[error("position {0} lies inside an obstacle")]
    InsideObstacle(f64),

    #[error(
        "acceptance rate {rate:e} ({accepted} of {attempted}) is below 1e-4; \
         move x closer to the RIS or reduce obstacle density"
    )]
    LowAcceptance {
        rate: f64,
        accepted: u64,
        attempted: u64,
    },

    #[error("{what}: {lhs:e} != {rhs:e} (relative difference {rel:e})")]
    IdentityMismatch {
        what: &'static str,
        lhs: f64,
        rhs: f64,
        rel: f64,
    },

    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical trouble.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidParameter(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
