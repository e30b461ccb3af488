//! Minimax optimization library and verification harness.
//!
//! Implements simultaneous first-order methods for `min_x max_y f(x, y)` —
//! gradient descent ascent (GDA), optimistic GDA (OGDA), extragradient (EG)
//! and generalized OGDA with split rates for the gradient and correction
//! terms — together with the analytic problem instances, stochastic gradient
//! oracles, stationarity metrics (primal gradient, Moreau envelope), exact
//! spectral predictors for the quadratic instances, and an experiment
//! harness (runs, sweeps, rate fits, reproduction recipes).

// Comparisons written as `!(x > 0.0)` are deliberate: they reject NaN,
// which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod harness;
pub mod metrics;
pub mod optimizers;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod spectral;

pub use optimizers::{Method, StepSizes, Trajectory};
pub use problems::{PrimalDualPoint, Problem};
