//! Day-by-day allocation of meal-kit orders to factories.
//!
//! The objective is the site-level WMAPE between consecutive days' recipe
//! allocations, subject to exact capacities on every factory but the
//! catch-all and to recipe eligibility.

pub mod error;
pub mod fixtures;
pub mod generator;
pub mod io;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod simulator;
pub mod solvers;

#[cfg(test)]
mod testkit;

pub use error::{Error, Result};
