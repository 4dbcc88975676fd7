//! Attractors of iterated function systems built from convex contractions.
//!
//! A convex contraction family satisfies, for every pair of maps,
//! `|f_i f_j x - f_i f_j y| <= a_ij |x - y| + b_ij |f_i x - f_i y| + c_ij |f_j x - f_j y|`
//! with `max (a_ij + b_ij + c_ij) < 1`. Individual maps need not be
//! contractions. The crate computes finite approximations of the attractor
//! with Hausdorff-distance bounds, addresses it through code space, and
//! renders 1-D and 2-D clouds.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod codespace;
pub mod config;
pub mod error;
pub mod geometry;
pub mod maps;
pub mod render;
pub mod system;

pub use error::{Error, Result};
pub use geometry::{Point, PointSet};
pub use maps::{DomainBox, MapDescriptor};
pub use system::{CoefficientTable, Coefficients, IFSSystem};
