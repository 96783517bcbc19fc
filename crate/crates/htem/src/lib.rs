//! Robust Bayesian variable selection under hyperbolic and Student-t
//! error mixtures: a Gibbs sampler with Metropolis-Hastings model moves,
//! posterior summarization, synthetic benchmark scenarios, and evaluation
//! metrics.

pub mod data;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
