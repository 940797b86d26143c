//! Power allocation for multi-access channels under generalized power
//! constraints.
//!
//! The crate works at the entropy-power abstraction: every transmitter is
//! described by its stationary channel-gain law, an average power budget and
//! a peak power, and contributes `N(h, g)` to the sum-rate lower bound
//! `½·ln(1 + Σ N(h_i, g_i))`. On top of that it provides the invariant
//! threshold policy, best responses through Lagrangian duality, dual
//! certificates and the empirical invariance threshold `N*`.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod entropy_power;
mod error;
mod numeric;
pub mod optimize;
pub mod policy;
pub mod rate;
mod rng;

pub use channel::{GainLadder, SystemSpec, UserSpec};
pub use entropy_power::{EntropyPowerModel, NoiseModel, PowerLawConstraint};
pub use error::{Error, Result};
pub use optimize::PowerGrid;
pub use policy::{AtomicDistribution, InvariantPolicy, Policy, PolicyProfile};
pub use rate::{EvalMethod, EvalResult, EvalSettings};
