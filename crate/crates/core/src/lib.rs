//! Extreme value mixture modelling and tail risk estimation.

pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod fit;
pub mod mixture;
pub mod optim;
pub mod quad;
pub mod risk;
pub mod rng;
pub mod stats;
pub mod study;
pub mod timeseries;

pub use error::{Error, Result};
