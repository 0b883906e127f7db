use std::io;

use thiserror::Error;

/// Errors raised while configuring or running a closed-loop simulation.
#[derive(Debug, Error)]
pub enum FunnelError {
    /// The tracking error reached the funnel boundary (or its guard band).
    #[error("funnel violated at t = {t:e}: phi*|e| = {product}")]
    FunnelViolation { t: f64, product: f64 },

    /// `psi` evaluated at an error on or beyond the funnel boundary.
    #[error("error outside the funnel: phi*|e| = {product}")]
    OutsideFunnel { product: f64 },

    /// Initial data is not inside the funnel.
    #[error("initial error outside the funnel: phi(0)*|e(0)| = {product}")]
    InitialFunnelViolation { product: f64 },

    #[error("argument outside the open unit ball: |y| = {norm}")]
    Domain { norm: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("singular steady-state system at beta = {beta}")]
    Solve { beta: f64 },

    #[error("state diverged at t = {t:e}")]
    Diverged { t: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl FunnelError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        FunnelError::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, FunnelError>;
