//! Simultaneous sup-norm confidence bounds for discrete distribution estimation.
//!
//! Given `n` i.i.d. draws from a distribution `p` over a finite alphabet, the
//! maximum likelihood estimate `p̂ = counts / n` deviates from `p` in the
//! sup norm by a random amount. This crate computes radii `T` such that
//! `max_i |p_i − p̂_i| ≤ T` holds with a prescribed probability, ranging
//! from the classical McDiarmid baseline to moment-based and
//! variance-adaptive bounds, and provides the machinery used to check them:
//! exact binomial intervals, Monte Carlo and exact-enumeration coverage,
//! and numerical checks of the supporting inequalities.
//!
//! All logarithms are natural logarithms.

pub mod binomial;
pub mod bounds;
pub mod dist;
mod error;
pub mod rng;
pub mod ingest;
pub mod montecarlo;
pub mod numeric;
pub mod theory;

pub use error::{Error, Result};
