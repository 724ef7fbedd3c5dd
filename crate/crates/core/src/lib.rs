//! Singleton statistics for balls-into-bins and windowed backoff under
//! batched arrivals.
//!
//! The crate is split along the same lines as the analysis it supports:
//!
//! - [`ballsbins`]: seedable placement sampling and exact enumeration oracles.
//! - [`analytic`]: closed-form conditional probabilities, the subset-product
//!   check on singleton indicators, and Chernoff-style concentration bounds.
//! - [`protocols`]: window schedules (FB, BEB, LLB, STB) and the slotted engine.
//! - [`harness`]: multi-trial experiments, recursion audits, and reports.

pub mod analytic;
pub mod ballsbins;
pub mod error;
pub mod exact;
pub mod harness;
pub mod intmath;
pub mod protocols;
pub mod rng;

pub use error::{Error, Result};
pub use exact::ExactProbability;
pub use rng::{RngStream, StreamRng};
