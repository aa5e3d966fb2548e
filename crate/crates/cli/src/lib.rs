//! Scenario definitions, sweep execution, and CSV reporting for the
//! coexistence simulator.

pub mod csvio;
pub mod error;
pub mod scenario;
pub mod sweep;
