//! Throughput limits for a slotted random-access uplink with Chase-combining
//! HARQ.
//!
//! Devices arrive as a Poisson stream, each carrying an L-bit payload that
//! must be delivered within T seconds over W Hz of shared spectrum. The
//! spectrum is split into B frequency bins and the deadline into M slots;
//! every attempt picks a bin at random and the receiver Chase-combines a
//! device's transmissions until the combined SINR supports the coding rate.
//! This crate computes the largest supportable arrival rate and the best
//! (B, M) partition under Shannon (infinite block length) and
//! normal-approximation (finite block length) capacity models, at constant
//! received SNR or under Rayleigh fading, and ships a slot-level Monte Carlo
//! simulator to validate the analytic machinery.
//!
//! Modules:
//! * [`specfun`] — Gaussian tail Q and inverse, Lambert W secondary branch,
//!   incomplete gamma.
//! * [`model`] — scenarios, grids, the conditional occupancy distribution and
//!   Chase-combined SINR.
//! * [`ibl`] / [`fbl`] — outage probabilities and the aggregate-rate fixed
//!   point under each capacity model.
//! * [`optimizer`] — exhaustive (B, M) search and the high-/low-SNR closed
//!   forms.
//! * [`simulator`] — protocol-level and analytic-model event simulation.
//! * [`sweep`] — parameter sweeps producing tabular results.
//! * [`acceptance`] — the end-to-end validation suite.

// `!(x > 0.0)`-style guards are used on validation paths precisely because
// they reject NaN, which `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod analysis;
pub mod error;
pub mod fbl;
pub mod ibl;
pub mod model;
pub mod optimizer;
pub mod simulator;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{Fading, Grid, NuConvention, PerTfsRate, Regime, Scenario};
pub use optimizer::{optimize_exhaustive, Optimum, SearchOptions};
