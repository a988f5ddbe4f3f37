//! First-order vector fields whose flows reproduce constrained mechanical
//! motion in three degrees of freedom, with the classical multiplier
//! equations alongside for cross-checking.
//!
//! Modules, bottom-up: [`veccalc`] (differential calculus on ℝ³ and on
//! charts with a metric), [`engine`] (integrators, quadrature, drift and
//! cross-validation), [`cartesian`] (the field condition and its
//! certificate), [`surfaces`], [`nonholo`] and [`rigidbody`] (concrete
//! systems and their closed forms).

pub mod cartesian;
pub mod engine;
pub mod error;
pub mod nonholo;
pub mod poly;
pub mod rigidbody;
pub mod sampling;
pub mod surfaces;
pub mod veccalc;

pub use error::{Error, Result};
pub use veccalc::{Mat3, ScalarField, Vec3, VectorField};
