//! Simulation and estimation toolkit for multifractal random measures (MRM)
//! and multifractal random walks (MRW) built on the cone construction.
//!
//! The pipeline runs bottom-up:
//!
//! - [`exponents`]: Laplace exponents, tilted exponents and regime thresholds.
//! - [`geometry`]: exact cone measures and a quadrature oracle.
//! - [`fields`]: realizations of the log-field `omega_l` on dyadic grids.
//! - [`cascade`]: increments of `M_l` and of the walk `B(M_l)`.
//! - [`structure`]: structure functions and their ensemble normalization.
//! - [`estimate`]: slope fits, regime labels and scaling reports.
//! - [`harness`]: configuration, seeding and parallel experiment runs.

pub mod cascade;
pub mod error;
pub mod estimate;
pub mod exponents;
pub mod fields;
pub mod geometry;
pub mod harness;
pub mod stats;
pub mod structure;

pub use error::{Error, Result};
