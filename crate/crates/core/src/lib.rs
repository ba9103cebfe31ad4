//! Total-Lagrangian SPH for elastic solids, with a splitting random-choice
//! dynamic-relaxation damping that drives bodies to static equilibrium.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`]: Wendland C2 smoothing kernel.
//! * [`state`]: particle storage and constitutive laws.
//! * [`neighbors`]: cell grid, 3^D block colouring and reference neighbourhoods.
//! * [`tlsph`]: corrected TLSPH operators and the position-Verlet integrator.
//! * [`damping`]: artificial viscosity, implicit split operators, random choice.
//! * [`cases`]: benchmark bodies (cantilevers, falling ball).
//! * [`config`], [`runner`], [`output`]: configuration, time loop and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod config;
pub mod damping;
pub mod error;
pub mod kernel;
pub mod neighbors;
pub mod output;
pub mod runner;
pub mod state;
pub mod tlsph;

pub use error::{Error, Result};

/// Spatial vector. Two-dimensional bodies live in the x-y plane with z = 0.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Second-order tensor. Two-dimensional bodies keep the z-z entry of F at 1.
pub type Mat3 = nalgebra::Matrix3<f64>;
