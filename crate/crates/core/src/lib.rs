//! Genetic-algorithm-aided actor-critic (GAAC) on Mountain Car Continuous.
//!
//! Three stages: online actor-critic rounds with best-episode-only
//! retention ([`dataset`]), a parameter-fitness model ([`pfm`]) driving a
//! genetic optimizer ([`ga`]) that rewrites part of the collected policy
//! parameters, and supervised training of the final Gaussian policy
//! ([`pipeline`]).

pub mod actor_critic;
pub mod config;
pub mod dataset;
pub mod env;
pub mod error;
pub mod ga;
pub mod mlp;
pub mod pfm;
pub mod pipeline;
pub mod rundir;

pub use error::{GaacError, Result};
