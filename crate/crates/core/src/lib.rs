//! Differentially private estimation for convex floating bodies.
//!
//! The crate computes empirical directional quantiles of a point cloud,
//! assembles the halfspace approximation of its convex floating body, and
//! releases private versions of the quantile vector, the Steiner point and
//! Euclidean projections through a flattened Laplace mechanism gated on a
//! typical set. On top of those oracles it runs projected Langevin chains
//! whose endpoints are approximately uniform on the body.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line runner and the acceptance experiments live in a companion crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod admissible;
pub mod error;
pub mod extension;
pub mod gamma;
pub mod geometry;
pub mod langevin;
pub mod lp;
pub mod marginal;
pub mod mechanism;
pub mod num;
pub mod pipeline;
pub mod quantile;
pub mod typical;

pub use error::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// A point in `R^d`.
pub type Point = alloc::vec::Vec<f64>;
