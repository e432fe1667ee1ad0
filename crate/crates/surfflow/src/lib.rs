//! Streamfunction-vorticity solver for incompressible Navier-Stokes and
//! Euler flow on triangulated surfaces of arbitrary topology.
//!
//! The velocity field is represented through a discrete Hodge decomposition
//! `X_h = grad_h(Q_h) + rot_h(S_h) + H_h,N` built from piecewise-constant
//! tangential vectors, continuous P1 scalars, and Crouzeix-Raviart scalars.
//! Velocities are exactly tangential and discretely divergence-free by
//! construction, and the pressure decouples from the evolution.

pub mod bcs;
pub mod bench;
pub mod config;
pub mod error;
pub mod fem;
pub mod hodge;
pub mod linalg;
pub mod mesh;
pub mod output;
pub mod stepper;

pub use error::{Error, Result};
