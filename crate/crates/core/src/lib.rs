//! Adaptive goodness-of-fit testing in a density model.
//!
//! The test statistic is a supremum, over a finite collection of projection
//! spaces, of unbiased estimates of the squared L2 distance to the null, each
//! penalized by its own Monte Carlo quantile. A single level `u_alpha` shared
//! by all models is calibrated so the supremum test has level `alpha`.
//! Composite hypotheses (location/scale families) take the infimum of the
//! statistic over the family parameters.

pub mod adaptive_test;
pub mod alternatives;
pub mod bases;
pub mod baselines;
pub mod calibration;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod null_models;
pub mod oracles;
pub mod quadrature;
pub mod special;
pub mod stream;
pub mod tables;

pub use error::{GofError, Result};
