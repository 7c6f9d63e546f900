use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{method} generation failed: {reason}")]
    Generation { method: &'static str, reason: String },

    /// No interior maximum could be bracketed.
    #[error("bracket failure: {0}")]
    BracketFailure(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("price must be strictly positive, found {value} at index {index}")]
    NonPositivePrice { index: usize, value: f64 },

    #[error("liquidity ratio mismatch: pool x/y = {pool_ratio}, amounts x/y = {amount_ratio}")]
    RatioMismatch { pool_ratio: f64, amount_ratio: f64 },

    #[error("reserve underflow: removing {requested} from reserve {reserve}")]
    ReserveUnderflow { requested: f64, reserve: f64 },

    #[error("stage order violation: expected {expected}, ledger is at {found}")]
    StageOrder {
        expected: &'static str,
        found: &'static str,
    },

    #[error("infeasible closure: G = {g}, H = {h}")]
    InfeasibleClosure { g: f64, h: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Returns `Err(Domain)` unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn require_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "hurst exponent must lie in (0, 1), got {hurst}"
        )))
    }
}
