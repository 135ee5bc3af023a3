use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A numeric argument or parameter lies outside its valid domain.
    #[error("domain error: {name} = {value} ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("insufficient samples: need at least 2, have {have}")]
    InsufficientSamples { have: usize },

    #[error("non-finite sample {0}")]
    NonFinite(f64),

    /// The abandonment indicator does not change sign across the bracket.
    #[error("not bracketed: abandoned({lo}) = {at_lo}, abandoned({hi}) = {at_hi}")]
    NotBracketed {
        lo: f64,
        hi: f64,
        at_lo: bool,
        at_hi: bool,
    },

    #[error("node index {index} out of range for {n_nodes} nodes")]
    NodeIndex { index: usize, n_nodes: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> ModelError {
    ModelError::Domain {
        name,
        value,
        reason,
    }
}

/// Checks `u ∈ [0, 1]`.
pub(crate) fn check_control(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(domain("u", u, "control effort must lie in [0, 1]"))
    }
}

/// Checks `D ≥ 0` and finite.
pub(crate) fn check_noise(d: f64) -> Result<()> {
    if d.is_finite() && d >= 0.0 {
        Ok(())
    } else {
        Err(domain("D", d, "noise intensity must be finite and non-negative"))
    }
}
