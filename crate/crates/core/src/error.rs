use thiserror::Error;

/// Which moving front a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid growth law: {0}")]
    InvalidGrowth(String),

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("expression parse error at byte {pos}: {reason}")]
    Expression { pos: usize, reason: String },

    #[error("stencil too short: captured kernel mass {mass} < {required}")]
    StencilTruncated { mass: f64, required: f64 },

    #[error(
        "stability violation at t={t}: density {value:e} at x={x} (dt*(d+Lip) guard or growth law broken)"
    )]
    StabilityViolation { t: f64, x: f64, value: f64 },

    #[error("stability guard violated: dt*(d+Lip_f) = {product} > 0.5")]
    StabilityGuard { product: f64 },

    #[error("{side} front at t={t} came within one kernel radius of the window edge")]
    WindowExit { t: f64, side: Side },

    #[error("no convergence after {iterations} iterations (last change {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("front iteration did not contract after {iterations} iterations (distance {distance:e})")]
    NoContraction { iterations: usize, distance: f64 },

    #[error(
        "no critical length: f'(0) = {fprime0} >= d = {d}, spreading always happens in this regime"
    )]
    NoCriticalLength { fprime0: f64, d: f64 },

    #[error("could not bracket the sign change of lambda_p: {0}")]
    BracketFailure(String),

    #[error("invalid bracket: lambda_p on (-h1, h1) is {lambda1} >= 0; choose h1 < ell*/2")]
    InvalidBracket { lambda1: f64 },

    #[error("no expansion threshold: {0}")]
    NoThreshold(String),

    #[error("steady state not reached by t = {t_max}")]
    NotConverged { t_max: f64 },
}

impl Error {
    /// Failures produced by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StabilityViolation { .. }
                | Error::NoConvergence { .. }
                | Error::NoContraction { .. }
                | Error::BracketFailure(_)
                | Error::NotConverged { .. }
                | Error::WindowExit { .. }
        )
    }

    pub(crate) fn arg(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
