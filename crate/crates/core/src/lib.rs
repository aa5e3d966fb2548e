//! Stochastic-geometry simulator and analytic models for K-tier multi-RAT
//! HetNet coexistence on a shared unlicensed band.
//!
//! The crate has two halves that check each other:
//! - a Monte Carlo half (`ppp`, `assoc`, `csma`, `sir`) that deploys marked
//!   Poisson networks, associates users, resolves opportunistic CSMA/CA
//!   contention, and measures SIR-based coverage and capacity at a typical
//!   user, and
//! - an analytic half (`analytic`) evaluating the matching closed-form void
//!   probabilities, channel-access probabilities, coverage lower bounds, and
//!   network-capacity bounds.
//!
//! Everything is deterministic given a root seed: parallel trials merge in
//! trial order, so results are byte-identical across worker counts.

pub mod analytic;
pub mod assoc;
pub mod config;
pub mod csma;
pub mod error;
pub mod geom;
pub mod ppp;
pub mod quad;
pub mod rng;
pub mod sir;
pub mod stats;

pub use error::{Error, Result};
