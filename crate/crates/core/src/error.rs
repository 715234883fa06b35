use thiserror::Error;

/// Failures raised anywhere in the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "integration did not converge ({context}): value {value:e}, error estimate {estimate:e}"
    )]
    Integration {
        context: String,
        value: f64,
        estimate: f64,
    },

    #[error("divergent bath integral: {0}")]
    Divergence(String),

    #[error("rate evaluation failed at tau = {tau}: {source}")]
    Rate {
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no sign change on [{theta_lo}, {theta_hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoCrossing {
        theta_lo: f64,
        theta_hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("Hilbert space dimension {dim} exceeds the dense limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("truncation leakage {leakage:e} exceeds {limit:e}")]
    TruncationLeakage { leakage: f64, limit: f64 },

    #[error("state norm became non-positive ({0:e})")]
    NonPositiveNorm(f64),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at_tau(self, tau: f64) -> Self {
        match self {
            e @ Error::Rate { .. } => e,
            other => Error::Rate {
                tau,
                source: Box::new(other),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
