//! Monitored-qubit trajectories and the effective-time reparametrization.
//!
//! The crate is `no_std` (it needs `alloc`). It holds three simulation
//! engines and the statistics used to check them:
//!
//! - [`discrete`]: iterated weak measurements alternating with exact thermal
//!   relaxation, with the discrete quadratic-variation clock.
//! - [`sde`]: Euler–Maruyama integration of the finite-rate monitoring SDE,
//!   the integral effective-time clock, and resampling onto an effective-time
//!   grid.
//! - [`limit`]: the infinite-rate process, a Brownian motion reflected in
//!   `[0, 1]` together with its boundary local times and the physical-time
//!   map they induce.
//! - [`stats`]: reference laws, detectors and goodness-of-fit estimators.
//!
//! Randomness is always derived from a [`SeedSpec`], so a trajectory depends
//! only on `(master_seed, trajectory_index)`.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod discrete;
mod error;
pub mod limit;
mod math;
pub mod model;
pub mod quadrature;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use model::{Gamma, ModelParams, SeedSpec, Trajectory};
