use thiserror::Error;

/// Errors surfaced by the library. Each variant maps to a stable exit/status code
/// through [`Error::code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point outside the support: {0}")]
    SupportViolation(String),
    #[error("exact path needs rational parameters: {0}")]
    IrrationalParameter(String),
    #[error("unsupported family/point pair: {0}")]
    UnsupportedPair(String),
    #[error("invalid connection pair: {0}")]
    InvalidPair(String),
    #[error("ratio expansion must start with w_0 = 1")]
    NonunitW0,
    #[error("denominator density vanishes at x = {0}")]
    DivisionAtBoundary(f64),
    #[error("quadrature did not converge: estimated error {error:e} above tolerance {tol:e}")]
    QuadratureNonconvergence { error: f64, tol: f64 },
    #[error("series truncation unreliable: tail bound {bound:e} above tolerance {tol:e} at K = {k}")]
    TruncationUnreliable { bound: f64, tol: f64, k: usize },
    #[error("infinite product did not reach tolerance within {0} factors")]
    ProductNonconvergence(usize),
    #[error("envelope violated at x = {x}: ratio {ratio} exceeds M = {m}")]
    EnvelopeViolation { x: f64, ratio: f64, m: f64 },
    #[error("empty sample")]
    EmptySample,
}

impl Error {
    /// Numeric status code shared by the CLI (as exit code) and the C ABI.
    pub fn code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::SupportViolation(_)
            | Error::IrrationalParameter(_)
            | Error::UnsupportedPair(_)
            | Error::InvalidPair(_)
            | Error::NonunitW0
            | Error::DivisionAtBoundary(_)
            | Error::EmptySample => 3,
            Error::QuadratureNonconvergence { .. }
            | Error::TruncationUnreliable { .. }
            | Error::ProductNonconvergence(_) => 4,
            Error::EnvelopeViolation { .. } => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
