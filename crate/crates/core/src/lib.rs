//! Sequential Monte Carlo likelihood estimators for Markov jump processes
//! observed without error, built around the Frankenfilter: an unbiased
//! hybrid of the alive and bootstrap particle filters that stops each
//! interval once a target total success is reached, subject to lower and
//! upper caps on the number of simulations.

pub mod config;
pub mod dataset;
pub mod dist;
pub mod error;
pub mod estimate;
pub mod estimator;
pub mod filters;
pub mod io;
pub mod mjp;
pub mod models;
pub mod oracle;
mod parallel;
pub mod pmmh;
pub mod rng;
pub mod tuning;

pub use config::{FilterConfig, SuccessMeasure, UNBOUNDED};
pub use dataset::{Dataset, DatasetMeta, ObsMatrix};
pub use error::{Error, Result};
pub use estimate::{IntervalRecord, LikelihoodEstimate, StopKind};
pub use estimator::{FnEstimator, LikelihoodEstimator};
pub use rng::RngStream;
