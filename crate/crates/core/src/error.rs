use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value ({0})")]
    NonFinite(String),

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("tail integration needs a decay hint with exponent > 1")]
    MissingDecayHint,

    #[error("degenerate denominator at r = {r}: {reason}")]
    DegenerateDenominator { r: f64, reason: String },

    #[error("psi kernel vanishes on (0, {0}]")]
    ZeroPsi(f64),

    #[error("beta must be > -1, got {0}")]
    BetaOutOfRange(f64),

    /// Raised by routines whose underlying result only covers -1 < beta <= 0.
    #[error("beta = {0} > 0 is outside the range -1 < beta <= 0 required here")]
    PositiveBeta(f64),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("weight is not in the class: {0}")]
    NotInClass(String),

    #[error("weight is not in the hat class: {0}")]
    NotInHatClass(String),

    #[error("no grid point admits a member class: {0}")]
    EmptyGrid(String),

    #[error("pair (f, g) does not carry a certified hypothesis: {0}")]
    HypothesisNotCertified(String),

    #[error("empty admissible range: {0}")]
    EmptyAdmissibleRange(String),

    #[error("W(I) = integral of w over (0,1) diverges")]
    DivergentWI,

    #[error("quadrature did not converge: {0}")]
    NotConverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::DivergentIntegral(_))
    }
}
