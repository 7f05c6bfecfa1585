//! High-frequency simulation of Itô semimartingales and estimation of the
//! conditional variance appearing in central limit theorems for power
//! variations.
//!
//! The crate is organised bottom-up:
//!
//! * [`simulate`] generates paths together with the hidden ground truth
//!   (fine volatility path and the exact jumps) and evaluates the true
//!   conditional variance of a path.
//! * [`statistics`] holds power variations, local block statistics and the
//!   Gaussian constants `m_p` and `c_p`.
//! * [`estimators`] implements the three universal variance estimators and
//!   the two subsampling/linear-combination baselines.
//! * [`harness`] runs seeded Monte Carlo experiments against the oracle.
//! * [`cli`] is the command-line frontend.

pub mod accumulate;
pub mod cli;
pub mod combinations;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod seed;
pub mod simulate;
pub mod statistics;

pub use error::{Error, Result};
