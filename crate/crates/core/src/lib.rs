//! Numerical laboratory for automated liquidity.
//!
//! - [`stochastic_paths`]: seeded fractional Brownian motion and fractional
//!   Ornstein-Uhlenbeck price paths.
//! - [`kelly_impact`]: Kelly-growth market impact (square-root law and its
//!   Hurst generalisation) and the single-asset OU strategy.
//! - [`cpmm_engine`]: fee-free constant-product pool and its linearised impact.
//! - [`carnot_cycle`]: the four-stage swap/add/swap/remove cycle as a ledger.
//! - [`catbond_kelly`]: Kelly sizing for bonds with a default probability.

pub mod carnot_cycle;
pub mod catbond_kelly;
pub mod cpmm_engine;
pub mod csv;
pub mod error;
pub mod kelly_impact;
pub mod numerics;
pub mod optimize;
pub mod stochastic_paths;

pub use error::{Error, Result};
