//! Far-field scattering by clouds of many small impedance obstacles.
//!
//! The point-scatterer (Foldy-Lax) model replaces each obstacle by a monopole
//! at its center whose strength solves a dense `M x M` algebraic system. The
//! [`oracle`] module solves the full boundary-integral problem for spheres and
//! the [`analysis`] module measures the gap between the two as the obstacle
//! size shrinks.
//!
//! The low-level numerics ([`kernels`], [`linalg`]) are generic over the real
//! scalar type; the domain layers work in double precision through the
//! aliases below.

// Negated comparisons below deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod foldylax;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod oracle;
pub mod scalar;
pub mod special;
pub mod vec3;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Real scalar used by the domain layers.
pub type Real = f64;
/// Complex scalar used by the domain layers.
pub type Complex = num_complex::Complex<f64>;
/// Point or direction in space.
pub type Vec3 = [f64; 3];

/// Incident plane wave in double precision.
pub type IncidentWave = kernels::IncidentWave<f64>;
/// Dense complex matrix in double precision.
pub type Matrix = linalg::DenseMatrix<f64>;

pub use analysis::{FarFieldError, RateFit};
pub use foldylax::{
    CoefficientVariant, FarFieldGrid, FoldyLaxSolution, FoldyLaxSystem, InvertibilityReport,
    ScatteringCoefficient,
};
pub use geometry::{CloudStats, RegimeParams, ScattererCloud};
pub use oracle::{BieSettings, BieSystem, SurfaceDensity};
