//! Helmholtz fundamental solution, plane waves and the far-field phase kernel.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vec3;

/// Default upper bound on admissible wavenumbers.
pub const DEFAULT_KAPPA_MAX: f64 = 2.0 * std::f64::consts::PI;

/// Plane wave `exp(i kappa x . theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave<T: Scalar = f64> {
    kappa: T,
    theta: [T; 3],
}

impl<T: Scalar> IncidentWave<T> {
    /// Builds a wave with the default `kappa_max` of `2 pi`.
    pub fn new(kappa: T, theta: [T; 3]) -> Result<Self> {
        Self::with_kappa_max(kappa, theta, T::lit(DEFAULT_KAPPA_MAX))
    }

    /// Builds a wave; `theta` must be unit length to `1e-14`.
    pub fn with_kappa_max(kappa: T, theta: [T; 3], kappa_max: T) -> Result<Self> {
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::InvalidInput(format!("wavenumber must be positive, got {kappa}")));
        }
        if kappa > kappa_max {
            return Err(Error::InvalidInput(format!(
                "wavenumber {kappa} exceeds kappa_max {kappa_max}"
            )));
        }
        let n = vec3::norm(&theta);
        if !((n - T::one()).abs() <= T::tol(1e-14)) {
            return Err(Error::NonUnitDirection(n.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { kappa, theta })
    }

    /// Like [`IncidentWave::with_kappa_max`] but normalizes `direction` first.
    pub fn from_direction(kappa: T, direction: [T; 3], kappa_max: T) -> Result<Self> {
        let theta = vec3::normalize(&direction)
            .ok_or_else(|| Error::InvalidInput("incident direction is the zero vector".into()))?;
        Self::with_kappa_max(kappa, theta, kappa_max)
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn theta(&self) -> [T; 3] {
        self.theta
    }

    /// The same wavenumber travelling along `theta` (no kappa_max check).
    pub fn redirected(&self, theta: [T; 3]) -> Result<Self> {
        Self::with_kappa_max(self.kappa, theta, self.kappa)
    }

    pub fn at(&self, x: &[T; 3]) -> Complex<T> {
        plane_wave(self, x)
    }
}

/// `exp(i kappa |x - y|) / (4 pi |x - y|)`.
pub fn phi<T: Scalar>(kappa: T, x: &[T; 3], y: &[T; 3]) -> Result<Complex<T>> {
    let r = vec3::dist(x, y);
    if !(r >= T::lit(1e-300)) || r == T::zero() {
        return Err(Error::CoincidentPoints(r.to_f64().unwrap_or(0.0)));
    }
    Ok(phi_at_distance(kappa, r))
}

/// Fundamental solution as a function of the distance `r > 0`.
#[inline]
pub fn phi_at_distance<T: Scalar>(kappa: T, r: T) -> Complex<T> {
    let four_pi = T::lit(4.0) * T::PI();
    Complex::from_polar(T::one() / (four_pi * r), kappa * r)
}

/// `exp(i kappa x . theta)`.
pub fn plane_wave<T: Scalar>(wave: &IncidentWave<T>, x: &[T; 3]) -> Complex<T> {
    Complex::from_polar(T::one(), wave.kappa * vec3::dot(x, &wave.theta))
}

/// `exp(-i kappa xhat . z)`, the far-field phase of a point source at `z`.
pub fn farfield_kernel<T: Scalar>(kappa: T, xhat: &[T; 3], z: &[T; 3]) -> Result<Complex<T>> {
    check_unit(xhat)?;
    Ok(Complex::from_polar(T::one(), -kappa * vec3::dot(xhat, z)))
}

pub(crate) fn check_unit<T: Scalar>(xhat: &[T; 3]) -> Result<()> {
    let n = vec3::norm(xhat);
    if (n - T::one()).abs() > T::tol(1e-10) || !n.is_finite() {
        return Err(Error::NonUnitDirection(n.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}
