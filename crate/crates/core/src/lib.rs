//! Safe parameter optimization with Nadaraya-Watson confidence bounds.
//!
//! The learner keeps a finite grid of candidate parameters, a running
//! intersection of confidence intervals for the reward and every
//! constraint, and a safe set grown through a Lipschitz argument. Each
//! iteration samples the most uncertain point among the potential
//! maximizers and the potential expanders of the safe set.

pub mod benchmarks;
pub mod concentration;
pub mod error;
pub mod estimator;
pub mod gp;
pub mod kernel;
pub mod rng;
pub mod safe_learn;
pub mod spatial;
pub mod trace;

pub use error::{Error, Result};
