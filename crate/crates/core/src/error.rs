use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch { context: &'static str, expected: usize, got: usize },

    #[error("{what} index {index} out of range (size {size})")]
    OutOfRange { what: &'static str, index: usize, size: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("enumeration budget exceeded: {needed} trajectories > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("aggregation failed: {0}")]
    Aggregation(String),

    #[error("round {round}, local step {step}, agent {agent}: {reason}")]
    Agent { round: usize, step: usize, agent: usize, reason: String },

    #[error("parameter norm {norm:e} exceeded divergence guard at round {round}")]
    Diverged { round: usize, norm: f64 },
}

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, got })
    }
}
