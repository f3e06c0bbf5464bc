//! Simulation, estimation and verification toolkit for weighted pairwise
//! statistics of stationary time series.
//!
//! The pieces fit together like this:
//!
//! * [`process`] generates stationary sample paths — causal linear filters of
//!   iid innovations and iterated random maps — with deterministic,
//!   role-separated random streams so paths can be replayed, reconstructed
//!   and coupled.
//! * [`weights`] and [`kernels`] describe the two ingredients of the
//!   statistic U_n = sum_{i,j} w_{i-j} K(X_i, X_j): a symmetric weight
//!   sequence on the lag and a symmetric kernel on the pair of values.
//! * [`engine`] evaluates U_n by several routes (dense, banded,
//!   sorting-based) that must agree, and exposes rank-statistic identities
//!   used to cross-check them.
//! * [`contraction`] estimates how fast a process forgets its past: coupling
//!   decay rates, truncation sensitivities, projection norms and a
//!   distributional concentration probe.
//! * [`longmem`] covers the long-range dependent regime: variance growth
//!   exponents, the dominant quadratic term of the expansion, and the
//!   limiting variance constants obtained by numerical integration.
//! * [`harness`] runs replicated experiments over a grid of sample sizes and
//!   summarizes variance growth and approximate normality.

pub mod error;
pub mod rng;
pub mod stats;
pub mod quad;
pub mod process;
pub mod weights;
pub mod kernels;
pub mod contraction;
pub mod engine;
pub mod longmem;
pub mod harness;

pub use error::{Error, Result};
