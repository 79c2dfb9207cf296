use thiserror::Error;

/// Errors raised by the toolkit. Messages name the violated constraint.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate shape function: 1 - f(s) vanished at s = {0}")]
    Degenerate(f64),

    #[error("law at position {0} of the path is not linear-fractional")]
    NotLinearFractional(usize),

    #[error("rho = 2 is the critical boundary; no survival prediction is available there")]
    Boundary,

    #[error("inadmissible perpetuity: beta = {beta} must exceed -gamma/2 = {}", -gamma / 2.0)]
    Inadmissible { beta: f64, gamma: f64 },

    #[error("rho_hat = {0} lies outside (-1/2, inf]")]
    OutOfRegion(f64),

    #[error("conditional extinction is certain to machine precision")]
    ExtinctionCertain,
}

pub type Result<T> = std::result::Result<T, Error>;
