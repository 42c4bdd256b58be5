//! Constrained-Hamiltonian dynamics of relativistic rotators.
//!
//! The crate builds phase-space states for the rotator family, evaluates and
//! verifies the primary-constraint algebra under canonical Poisson brackets,
//! integrates gauge-fixed equations of motion for phenomenological and
//! fundamental rotators, and provides the observables (rapidity, curvature
//! radius, angular velocity, torsion) and Hessian-rank diagnostics that
//! separate the two kinds.
//!
//! Core math is generic over [`scalar::Scalar`], so every formula also runs
//! on dual numbers for exact gradients and Hessians.

pub mod analysis;
pub mod bracket;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod minkowski;
pub mod model;
pub mod scalar;
pub mod sphere;
pub mod verify;

pub use error::{CoreError, Result};
pub use minkowski::FourVector;
pub use model::{CasimirPair, GFamily, RotatorKind, RotatorSpec};
pub use scalar::{Dual, Dual2_64, Dual64, Scalar};

/// Four-vector over `f64`, the default working precision.
pub type Vec4 = FourVector<f64>;
/// Four-vector over `f32`.
pub type Vec4f = FourVector<f32>;
/// Four-vector of dual numbers, for gradient evaluation.
pub type Vec4Dual = FourVector<Dual64>;
