//! Round-based simulator and solver suite for autonomous hazard-mitigation
//! dispatch.
//!
//! A fleet of sensing UAVs and cleaning UGVs services a field of sites whose
//! hazard levels grow and couple spatially over time. Site-level hazard
//! beliefs are maintained with time-weighted Bayesian updates, sensing targets
//! are scored with a Bayesian Upper Confidence Bound, and both the sensing and
//! cleaning phases are dispatched by solving vehicle routing problems with
//! profits (VRPP).
//!
//! Module layout follows the pipeline:
//!
//! - [`env`] — ground truth: hazard dynamics, noisy observation, cleaning.
//! - [`belief`] — per-site Gaussian beliefs and their update rules.
//! - [`policy`] — sensing scores (BUCB plus baselines) and cleaning targets.
//! - [`vrpp`] — routing model, exact solver (test oracle), and heuristic.
//! - [`dispatch`] — the end-to-end round loop, episodes, and metrics.
//! - [`config`] — scenario configuration, presets, and validation.
//! - [`report`] — trace/summary/report file emission and aggregation.

pub mod belief;
pub mod cli;
pub mod config;
pub mod dispatch;
pub mod env;
pub mod policy;
pub mod report;
pub mod rng;
pub mod vrpp;

use thiserror::Error;

/// Crate-wide error type for operation contracts.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is outside its documented range.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument refers to data that does not exist (bad site index, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A caller violated an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// The exact solver was asked to handle more sites than it enumerates.
    #[error("instance too large for exact solver: {sites} sites exceeds limit {limit}")]
    TooLarge { sites: usize, limit: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
