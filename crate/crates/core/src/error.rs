//! Error types shared by every simulator module.

use thiserror::Error;

/// Errors surfaced by layout construction, channel modelling and campaign runs.
#[derive(Debug, Error)]
pub enum SimError {
    /// One or more configuration constraints were violated.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    /// Small-cell placement could not satisfy the drop constraints.
    #[error("deployment failed in sector {sector}: {reason}")]
    Deployment { sector: usize, reason: String },

    /// A device had no candidate server.
    #[error("association failed for device {device}: no candidate servers")]
    Association { device: usize },

    /// More devices than orthogonal pilot sequences.
    #[error("pilot capacity exceeded: {devices} devices for {sequences} sequences")]
    PilotCapacity { devices: usize, sequences: usize },

    /// Channel estimate too ill-conditioned for zero-forcing.
    #[error("precoder rank deficiency: condition number {condition:.3e} exceeds {threshold:.3e}")]
    Precoder { condition: f64, threshold: f64 },

    /// Broken internal invariant (dimension mismatch, violated rate bound, ...).
    #[error("internal consistency error: {0}")]
    Internal(String),

    /// Error raised while evaluating one Monte Carlo drop.
    #[error("drop {drop}: {source}")]
    Drop {
        drop: u64,
        #[source]
        source: Box<SimError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(vec![msg.into()])
    }

    pub fn in_drop(self, drop: u64) -> Self {
        SimError::Drop {
            drop,
            source: Box::new(self),
        }
    }

    /// True for errors caused by user-supplied configuration.
    pub fn is_config(&self) -> bool {
        match self {
            SimError::Config(_) => true,
            SimError::Drop { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
