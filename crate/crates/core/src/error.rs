use thiserror::Error;

/// Errors surfaced by the pricing lab.
#[derive(Debug, Error)]
pub enum PricingError {
    /// A noise, instance, grid or policy configuration violates its invariants.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// `act`/`observe` called out of order.
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    /// Power-law fit inputs cannot determine a slope.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// A persisted trace broke the non-negative, non-decreasing regret invariant.
    #[error("regret invariant violated: {0}")]
    RegretInvariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = PricingError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> PricingError {
    PricingError::InvalidSpec(msg.into())
}
