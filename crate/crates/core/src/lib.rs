//! Tour engine for high-dimensional data.
//!
//! Builds keyframe sequences of orthonormal p×2 projection bases, compiles
//! them into smooth arc-length parameterized paths, and serves the resulting
//! projections to an interactive front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod service;
mod linalg;
pub mod strategies;
pub mod tourpath;

pub use error::{Result, TourError};
pub use geometry::{Basis, PlaneMatrix, PrincipalAngles, Rotation2};
