//! Eigenvalues of the single-layer and adjoint double-layer operators on a sphere.
//!
//! For a sphere of radius `R`, expanding `Phi` in spherical waves gives
//!
//! ```text
//! S[Y_lm]  = i kappa R^2 j_l(kappa R) h_l(kappa R) Y_lm
//! (-1/2 + D*)[Y_lm] = i kappa^2 R^2 j_l(kappa R) h_l'(kappa R) Y_lm
//! ```
//!
//! with the static limits `R / (2l+1)` and `-(l+1)/(2l+1)` at `kappa = 0`.

use crate::error::{Error, Result};
use crate::special::BesselTable;
use crate::Complex;

/// `(4 pi / 3)^(1/3) j_{1/2,1}` with `j_{1/2,1} = pi`: the sphere diameter
/// times the wavenumber must stay below this value.
pub const RESONANCE_LIMIT: f64 = 5.064_222_080_383_996;

#[derive(Debug, Clone, PartialEq)]
pub struct SphereSpectra {
    pub radius: f64,
    pub kappa: f64,
    /// Single-layer eigenvalues, `l = 0..=L`.
    pub single_layer: Vec<Complex>,
    /// Adjoint double-layer eigenvalues (direct value, without the jump `-1/2`).
    pub adjoint_double_layer: Vec<Complex>,
}

impl SphereSpectra {
    /// Eigenvalue of `-1/2 + D* + lambda S` on degree `l`.
    pub fn impedance_eigenvalue(&self, l: usize, lambda: Complex) -> Complex {
        self.adjoint_double_layer[l] - 0.5 + lambda * self.single_layer[l]
    }

    pub fn degree(&self) -> usize {
        self.single_layer.len() - 1
    }
}

pub fn check_resonance(kappa: f64, radius: f64) -> Result<()> {
    let value = kappa * 2.0 * radius;
    if !(value < RESONANCE_LIMIT) {
        return Err(Error::ResonanceGuard {
            value,
            limit: RESONANCE_LIMIT,
        });
    }
    Ok(())
}

pub fn sphere_operator_spectra(kappa: f64, radius: f64, lmax: usize) -> Result<SphereSpectra> {
    if !(radius > 0.0 && radius.is_finite()) || !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidInput(format!("bad sphere data: kappa = {kappa}, radius = {radius}")));
    }
    check_resonance(kappa, radius)?;
    let (single_layer, adjoint_double_layer) = if kappa == 0.0 {
        (0..=lmax)
            .map(|l| {
                let n = (2 * l + 1) as f64;
                (Complex::new(radius / n, 0.0), Complex::new(0.5 - (l + 1) as f64 / n, 0.0))
            })
            .unzip()
    } else {
        let x = kappa * radius;
        let t = BesselTable::new(lmax, x);
        let i = Complex::new(0.0, 1.0);
        (0..=lmax)
            .map(|l| {
                let s = i * kappa * radius * radius * t.j[l] * t.h(l);
                let d = i * kappa * kappa * radius * radius * t.j[l] * t.dh(l) + 0.5;
                (s, d)
            })
            .unzip()
    };
    Ok(SphereSpectra {
        radius,
        kappa,
        single_layer,
        adjoint_double_layer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::special::{gauss_legendre, legendre};

    #[test]
    fn resonance_constant() {
        assert!(((4.0 * PI / 3.0).powf(1.0 / 3.0) * PI - RESONANCE_LIMIT).abs() < 1e-14);
        assert!(check_resonance(1.0, 2.6).is_err());
        assert!(check_resonance(1.0, 2.5).is_ok());
    }

    #[test]
    fn static_limit() {
        let s = sphere_operator_spectra(0.0, 0.3, 4).unwrap();
        assert_eq!(s.single_layer[0], Complex::new(0.3, 0.0));
        assert_eq!(s.adjoint_double_layer[0], Complex::new(-0.5, 0.0));
        let small = sphere_operator_spectra(1e-6, 0.3, 4).unwrap();
        for l in 0..=4 {
            assert!((small.single_layer[l] - s.single_layer[l]).norm() < 1e-6);
            assert!((small.adjoint_double_layer[l] - s.adjoint_double_layer[l]).norm() < 1e-6);
        }
    }

    // Applies the operators to the zonal harmonic P_l(cos) and evaluates at the
    // north pole. With rho = 2R sin(t/2) both integrands are smooth in t.
    fn pole_quadrature(kappa: f64, r: f64, l: usize, n: usize) -> (Complex, Complex) {
        let (x, w) = gauss_legendre(n);
        let i = Complex::new(0.0, 1.0);
        let mut s = Complex::new(0.0, 0.0);
        let mut d = Complex::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            let t = PI / 2.0 * (xi + 1.0);
            let wt = PI / 2.0 * wi;
            let rho = 2.0 * r * (t / 2.0).sin();
            let p = legendre(l, t.cos())[l];
            let phase = (i * kappa * rho).exp();
            s += phase * (r / 2.0) * (t / 2.0).cos() * p * wt;
            d += phase * (i * kappa * rho - 1.0) * (t / 2.0).cos() / 4.0 * p * wt;
        }
        (s, d)
    }

    #[test]
    fn spectra_match_pole_quadrature() {
        let (kappa, r) = (1.0, 0.1);
        let spectrum = sphere_operator_spectra(kappa, r, 10).unwrap();
        for l in 0..=10 {
            let (s, d) = pole_quadrature(kappa, r, l, 40);
            assert!((spectrum.single_layer[l] - s).norm() < 1e-8 * s.norm().max(1e-3), "S l={l}");
            assert!((spectrum.adjoint_double_layer[l] - d).norm() < 1e-8, "D* l={l}");
        }
        let spectrum = sphere_operator_spectra(3.0, 0.7, 6).unwrap();
        for l in 0..=6 {
            let (s, d) = pole_quadrature(3.0, 0.7, l, 60);
            assert!((spectrum.single_layer[l] - s).norm() < 1e-10, "S l={l}");
            assert!((spectrum.adjoint_double_layer[l] - d).norm() < 1e-10, "D* l={l}");
        }
    }
}
