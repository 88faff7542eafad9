use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("state is not normalized (norm^2 = {norm_sqr:.3e})")]
    NotNormalized { norm_sqr: f64 },

    #[error("degenerate coupling: g = 0 leaves nothing to disentangle, use the diagonal propagator")]
    DegenerateCoupling,

    #[error("numeric failure in {context}: {detail}")]
    Numeric { context: &'static str, detail: String },

    #[error("trajectory reaches the singularity of the factorization near t = {t:.6} (|exp(i f2)| = {modulus:.3e})")]
    SingularityProximity { t: f64, modulus: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
