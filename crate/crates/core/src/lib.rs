//! System-level Monte Carlo simulator for two-tier cellular networks in which
//! massive-MIMO base stations backhaul dense small cells in-band, with a
//! massive-MIMO direct-access baseline.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod fading;
pub mod mimo;
pub mod propagation;
pub mod resources;
pub mod rng;
pub mod stats;
pub mod topology;

pub use config::SimConfig;
pub use engine::{run_campaign, run_drop, sweep_alpha, CampaignResult, DropResult};
pub use error::{Result, SimError};
