//! Oneshot differentially private top-k selection.
//!
//! The oneshot Laplace mechanism adds Laplace noise to every count once and
//! releases the unordered set of the `k` extreme noisy counts, plus fresh
//! noisy estimates of the selected values. This crate provides
//!
//! - [`noise`]: Laplace/Gumbel sampling on reproducible streams,
//! - [`mechanisms`]: the oneshot mechanism, Report Noisy Min, peeling and
//!   oneshot-Gumbel baselines, and noise calibration,
//! - [`analysis`]: the utility bound, an exact outcome-probability oracle and
//!   checkers for the inequalities behind the calibration,
//! - [`audit`]: exact and Monte Carlo certification of `(epsilon, delta)`
//!   on small instances,
//! - [`ranking`]: private top-k ranking from Bradley–Terry–Luce comparisons.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod analysis;
pub mod audit;
mod error;
pub mod mechanisms;
pub mod noise;
pub mod quadrature;
pub mod ranking;

pub use error::{Error, Result};
pub use mechanisms::{CountVector, PrivacyParams, TopKSelection};
pub use noise::{NoiseScale, RngState};
