//! Bayesian binary regression with a uniform-mixture prior on step functions.
//!
//! The prior draws a number of split points `m ~ ν`, places them uniformly on
//! `[0, 1]` and gives each cell an independent uniform height. The crate
//! provides the predictive probabilities of that prior (exact and Monte
//! Carlo), a reversible-jump sampler for the posterior, and tools for
//! studying the large-sample behaviour of the predictive probabilities.

pub mod asymptotics;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod io;
pub mod kernel;
pub mod model;
pub mod predictive;
pub mod rng;
pub mod sampler;
pub mod urn;

pub use error::{Error, Result};
pub use kernel::LogWeight;
pub use model::{DataSet, Function, GridFunction, RegressionFunction, StepFunction};
pub use sampler::HierarchyPrior;
