//! Crate-wide error type.
//!
//! A single enum so the CLI can map failure classes onto exit codes
//! (config errors -> 2, numerical aborts -> 3).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DiffwaveError>;

#[derive(Debug, Error)]
pub enum DiffwaveError {
    /// Inputs outside a function's mathematical domain (v <= 0, t < 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or missing experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical procedure failed to converge or produced an invalid state.
    #[error("numerical abort: {0}")]
    Numerical(String),

    /// Positivity of the specific volume was lost during time stepping.
    #[error("vacuum state: v = {v:.6e} in cell {cell} at t = {t:.6e}")]
    Vacuum { v: f64, cell: usize, t: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl DiffwaveError {
    pub fn domain(msg: impl Into<String>) -> Self {
        DiffwaveError::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        DiffwaveError::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        DiffwaveError::Numerical(msg.into())
    }

    /// Process exit code for the CLI: 2 config, 3 numerical, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            DiffwaveError::Config(_) => 2,
            DiffwaveError::Numerical(_) | DiffwaveError::Vacuum { .. } => 3,
            _ => 1,
        }
    }
}
