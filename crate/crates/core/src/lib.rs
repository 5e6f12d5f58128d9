//! Numerical laboratory for Lagrangian surplusection: intersection counts of
//! the Clifford torus with Haar-random real projective spaces, the closed-form
//! volume bounds they are compared with, a clean loop of `RP^2`s in `CP^2`,
//! and concurrent normals of convex bodies.

// negated comparisons are the NaN-rejecting form
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod clean_loop;
pub mod crofton;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod intersection;
pub mod normals;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{haar_unitary, projective_distance, vol_rpn, ProjectivePoint, UnitaryMatrix};
pub use rng::RngState;
