//! Boundary-integral ground truth for spherical obstacles.
//!
//! The scattered field is a sum of single-layer potentials, one per sphere,
//! with densities expanded in orthonormal spherical harmonics. On a sphere
//! the single-layer and adjoint double-layer operators are diagonal in that
//! basis ([`spectra`]); inter-sphere coupling is smooth and is integrated
//! with a product rule ([`bie`]). [`mie`] gives the separation-of-variables
//! series for one sphere as a second, independent reference.

pub mod bie;
pub mod mie;
pub mod spectra;

pub use bie::{assemble_bie, bie_farfield, solve_bie, BieSettings, BieSystem, SurfaceDensity};
pub use mie::{mie_reference, MieResult};
pub use spectra::{sphere_operator_spectra, SphereSpectra, RESONANCE_LIMIT};

use crate::{Complex, IncidentWave};
use crate::special::SphereQuadrature;

/// Power balance of a far-field pattern under the `exp(i kappa r) / (4 pi r)`
/// normalization: `int |U|^2 = (16 pi^2 / kappa) Im U(theta, theta)` for a
/// lossless obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// `int_{S^2} |U_inf|^2`.
    pub scattered: f64,
    /// `(16 pi^2 / kappa) Im U_inf(theta, theta)`.
    pub extinction: f64,
}

impl EnergyBalance {
    /// Extinguished minus scattered power; positive for absorbing obstacles.
    pub fn absorbed(&self) -> f64 {
        self.extinction - self.scattered
    }

    /// `|extinction - scattered| / scattered`.
    pub fn relative_residual(&self) -> f64 {
        (self.extinction - self.scattered).abs() / self.scattered
    }
}

/// Evaluates the balance for a far field given as a function of direction.
pub fn energy_balance(
    wave: &IncidentWave,
    quad_order: usize,
    far_field: impl Fn(&[[f64; 3]]) -> crate::Result<Vec<Complex>>,
) -> crate::Result<EnergyBalance> {
    let q = SphereQuadrature::new(quad_order);
    let values = far_field(&q.points)?;
    let scattered = values.iter().zip(&q.weights).map(|(u, w)| u.norm_sqr() * w).sum();
    let forward = far_field(&[wave.theta()])?[0];
    let kappa = wave.kappa();
    Ok(EnergyBalance {
        scattered,
        extinction: 16.0 * std::f64::consts::PI * std::f64::consts::PI / kappa * forward.im,
    })
}
