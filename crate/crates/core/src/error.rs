use thiserror::Error;

use crate::quadrature::QuadratureResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// A model or geometry parameter violates its invariant.
    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    /// Adaptive quadrature ran out of function evaluations.
    #[error(
        "quadrature did not converge after {} evaluations (best estimate {:e} +/- {:e})",
        best.evaluations, best.value, best.error_estimate
    )]
    Convergence { best: QuadratureResult },

    /// The van der Waals frequency integral diverges for non-dispersive particles.
    #[error("frequency integral diverges: {0}")]
    Divergent(String),

    /// Both `v_sum` and `v_xz` vanish, so no phase can be assigned.
    #[error("degenerate configuration: v_sum and v_xz are both zero")]
    Degenerate,

    /// The requested bracket does not enclose a sign change of `v_sum`.
    #[error("no sign change of v_sum in [{lo}, {hi}] ({f_lo:e}, {f_hi:e})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// Quadrature noise prevents certifying the sign of `v_sum` near a root.
    #[error("sign of v_sum not certifiable at tolerance floor; best interval [{lo}, {hi}]")]
    ToleranceFloor { lo: f64, hi: f64 },
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }
}
