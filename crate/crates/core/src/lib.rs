//! Simulation of wave maps from 1+1 dimensional Minkowski space into an
//! embedded Riemannian target, coupled to a two-form potential and a scalar
//! potential. Two independent solvers are provided: an explicit leapfrog
//! integrator acting on the ambient embedding, and a characteristic solver
//! that integrates the first-order transport system along light rays with a
//! Picard iteration. A diagnostics module checks the conservation laws and
//! bounds the continuum system satisfies, at the discretization order.

// Stencil code walks several parallel slices by index on purpose, and
// numeric guards use negated comparisons to reject NaN as well.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod extrinsic;
pub mod geometry;
pub mod initial;
pub mod lightcone;
pub mod linalg;
pub mod output;
pub mod runner;
pub mod potentials;

pub use error::{Error, Result};
pub use geometry::{AmbientVector, Chart, TargetManifold};
pub use potentials::{ScalarPotential, TwoFormPotential};
