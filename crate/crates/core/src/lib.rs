//! Phase optimization for IRS-aided two-way decode-and-forward relaying.
//!
//! The crate models a source `S` and destination `D` that exchange data
//! through a multi-antenna relay `RS`, assisted by an intelligent reflecting
//! surface with `N` passive elements. It provides:
//!
//! * [`channel`]: geometry, log-distance path loss and Rayleigh channel draws;
//! * [`rate`]: effective channels and the per-link and two-way system rates;
//! * [`optimizers`]: receive-power EVD, max-min rate via semidefinite
//!   relaxation, and sum-rate generalized power iteration, plus baselines;
//! * [`sdp`]: the max-min semidefinite program solvers and Gaussian
//!   randomization;
//! * [`sim`]: seeded Monte Carlo sweeps with CSV output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod numerics;
pub mod optimizers;
pub mod rate;
pub mod sdp;
pub mod sim;

pub use error::{Error, Result};
