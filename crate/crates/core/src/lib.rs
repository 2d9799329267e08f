//! momentlab: a laboratory for streaming first-order methods on realizable
//! least-squares problems.
//!
//! The crate implements four single-sample stochastic methods (SGD, heavy
//! ball, Nesterov's accelerated gradient, and an accelerated SGD with a
//! long-step running average), synthetic covariate distributions with exact
//! second and fourth moments, the exact linear operators that propagate the
//! iterate-error covariance, and an experiment harness that benchmarks decay
//! rates against the condition number and fits log-log slopes.

pub mod acceptance;
pub mod config;
pub mod harness;
pub mod numerics;
pub mod optimizers;
pub mod problems;
pub mod report;
pub mod spectral;
