use thiserror::Error;

/// Errors raised by the planning, optimization and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoolError {
    #[error("prevalence must satisfy 0 < p < 1, got {0}")]
    InvalidPrevalence(f64),

    #[error("pool size {size} is invalid for k = {k} (minimum {min})")]
    InvalidPoolSize { size: f64, k: u32, min: u32 },

    #[error("multiplicity k must be at least 1, got {0}")]
    InvalidMultiplicity(u32),

    #[error("Lambert W0 is undefined for x = {0} < -1/e")]
    LambertDomain(f64),

    #[error("no interior optimum for p = {p}, k = {k} in [{lo}, {hi}]: derivative does not change sign")]
    NoInteriorOptimum { p: f64, k: u32, lo: f64, hi: f64 },

    #[error("empty pool size range [{lo}, {hi}]")]
    EmptyRange { lo: u32, hi: u32 },

    #[error("invalid search bounds: {0}")]
    InvalidBounds(String),

    #[error("target {target} is outside the achievable range [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("savings threshold {0}% is never attained on the evaluation grid")]
    NotAttained(f64),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, PoolError>;
