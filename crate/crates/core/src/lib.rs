//! Deterministic federated-learning simulation harness.
//!
//! The crate is organized bottom-up: [`rng`] and [`params`] hold the numeric
//! primitives, [`data`] and [`partition`] build per-client datasets,
//! [`model`] trains small classifiers, [`federation`] runs the round
//! protocol and its algorithm variants, [`metrics`] scores finished runs and
//! [`exp`] drives configured experiments and sweeps.

pub mod data;
pub mod error;
pub mod exp;
pub mod federation;
pub mod metrics;
pub mod model;
pub mod params;
pub mod partition;
pub mod rng;

pub use error::{Error, Result};
