//! Noncooperative rate selection among RF-powered IoT sensors that buy
//! power from wireless chargers and share a blockchain's running cost in
//! proportion to the data they submit.
//!
//! - [`model`]: rate map, its closed-form inverse, fees and utilities.
//! - [`equilibrium`]: existence check, best response, equilibrium solvers
//!   and epsilon-Nash verification.
//! - [`oracle`]: brute-force reference implementations used for verification.
//! - [`config`] and [`experiment`]: config documents, experiment runners
//!   and CSV output behind the `crowdgame` binary.

pub mod config;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod model;
pub mod oracle;
mod search;

pub use error::{GameError, Result};
pub use model::{
    BlockchainParams, EquilibriumResult, GameConfig, PowerVector, RateInversion, RateVector, SensorParams,
};
