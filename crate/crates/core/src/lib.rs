//! Analytical throughput model, configuration optimizer and Monte Carlo
//! simulator for a multi-channel MAC in which full-duplex secondary users
//! sense for primary users while they transmit.
//!
//! The crate is layered bottom-up: [`model`] holds the scenario types,
//! [`sensing`] and [`contention`] the two building blocks of the analysis,
//! [`throughput`] combines them into per-channel and network throughput,
//! [`optimizer`] picks sensing parameters and channel-selection
//! probabilities, and [`simulator`] checks the analysis against a slot-level
//! simulation.

pub mod config;
pub mod contention;
pub mod error;
pub mod exec;
pub mod model;
pub mod optimizer;
pub mod partition;
pub mod quad;
pub mod sensing;
pub mod simulator;
pub mod throughput;
pub mod units;

pub use error::{Error, Result, ValidationErrors};
pub use exec::Execution;
pub use model::{validate, BitAccounting, ChannelModel, MacTimings, ModelOptions, Scenario};
