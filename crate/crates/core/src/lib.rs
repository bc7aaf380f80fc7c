//! Distributed consensus optimization over directed networks with noisy links.
//!
//! The crate simulates three gradient-tracking methods (R-Push-Pull, Push-Pull,
//! Push-DIGing) on a shared graph/problem/noise model, and evaluates the
//! linear-system convergence certificate for R-Push-Pull (transition matrix,
//! stepsize bound, asymptotic error bounds) so that simulated runs can be
//! checked against it.
//!
//! Module map:
//!
//! - [`topology`]: directed graphs, spanning-tree roots, the pull/push root check.
//! - [`mixing`]: row/column-stochastic weights, lazy blends, Perron vectors,
//!   contraction norms.
//! - [`objective`]: the local objective contract and the ridge-regression instance.
//! - [`noise`]: per-link Gaussian corruption of exchanged values.
//! - [`algorithms`]: the three iteration engines.
//! - [`theory`]: constants, transition matrix, stepsize bound, error bounds.
//! - [`harness`]: Monte-Carlo runner and output files.

// `!(x > 0.0)` is used on purpose so NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mixing;
pub mod noise;
pub mod objective;
pub mod seed;
pub mod theory;
pub mod topology;

pub use error::{Error, Result};
