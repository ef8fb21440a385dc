//! Climate-club negotiation simulator.
//!
//! Regions with a simple growth economy share a three-reservoir carbon cycle
//! and a two-layer temperature model. Every five-year step they negotiate
//! mitigation commitments, form clubs, and set import tariffs within bounds
//! that penalise partners committing to less. Protocol variants add discrete
//! defection, free trade among clubs, permanent punishment and hard defection.
//!
//! Module map:
//! - [`model`] climate and economy dynamics
//! - [`trade`] levels, tariff bounds, trade flows and settlement
//! - [`protocol`] the negotiation round state machine
//! - [`agents`] negotiating policies
//! - [`engine`] episodes and ensembles
//! - [`analysis`] metrics, Pareto fronts, correlations, pathways and charts
//! - [`config`] dotted-key configuration text

pub mod agents;
pub mod analysis;
pub mod config;
pub mod engine;
pub mod error;
pub mod fsum;
pub mod model;
pub mod protocol;
pub mod rng;
pub mod roster;
pub mod step;
pub mod trade;

pub use agents::{Agent, PolicySpec};
pub use config::Config;
pub use engine::{run_ensemble, run_episode, EpisodeError, EpisodeTrace, SimConfig};
pub use error::{Error, Result};
pub use model::{ClimateState, ModelConstants, RegionState};
pub use protocol::{ProtocolConfig, Variant};
pub use trade::{MitigationLevel, TariffLevel};
