//! Optimal interactive beam alignment for millimeter-wave links.
//!
//! The crate plans a fixed-length beam-alignment phase followed by a
//! constant-rate data phase, and checks the plan with a link-level
//! Monte-Carlo engine against baseline search protocols.
//!
//! Layers, bottom to top:
//! - [`angleset`]: interval-union arithmetic for supports and beams.
//! - [`phy`]: system parameters, path loss, sectored gains, channel draws.
//! - [`detection`]: beacon detector threshold, Marcum Q, minimum beacon energy.
//! - [`outage`]: gain CCDF, data-beam fraction, data energy densities.
//! - [`planner`]: value recursions, optimal alignment length, error analysis.
//! - [`policies`]: slot-by-slot protocols (fractional search and baselines).
//! - [`simulator`]: frame engine and Monte-Carlo statistics.
//! - [`cli`]: configuration files and experiment commands.

pub mod angleset;
pub mod cli;
pub mod detection;
pub mod error;
pub mod outage;
pub mod phy;
pub mod planner;
pub mod policies;
pub mod simulator;
pub mod units;

pub use error::{Error, Result};
