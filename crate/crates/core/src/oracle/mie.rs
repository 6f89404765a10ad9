//! Separation-of-variables series for one impedance sphere at the origin.
//!
//! For `d_r u + lambda u = 0` on `|x| = R` the scattered field is
//! `sum_l (2l+1) i^l A_l h_l(kappa r) P_l(cos gamma)` with
//!
//! ```text
//! A_l = -(kappa j_l'(kappa R) + lambda j_l(kappa R)) / (kappa h_l'(kappa R) + lambda h_l(kappa R))
//! ```
//!
//! so that `U_inf(xhat) = (4 pi / (i kappa)) sum_l (2l+1) A_l P_l(xhat . theta)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::foldylax::FarFieldGrid;
use crate::special::{legendre, BesselTable};
use crate::{kernels, vec3, Complex, IncidentWave, Vec3};

/// Far field from the truncated series and the size of the first omitted term.
#[derive(Debug, Clone)]
pub struct MieResult {
    pub grid: FarFieldGrid,
    /// `(2L+3) |A_{L+1}| 4 pi / kappa`, an estimate of the truncation remainder.
    pub remainder: f64,
}

/// Series coefficients `A_0..=A_lmax`.
pub fn mie_coefficients(kappa: f64, radius: f64, lambda: Complex, lmax: usize) -> Vec<Complex> {
    let x = kappa * radius;
    let t = BesselTable::new(lmax, x);
    (0..=lmax)
        .map(|l| {
            let num = lambda * t.j[l] + kappa * t.dj[l];
            let den = lambda * t.h(l) + t.dh(l) * kappa;
            -num / den
        })
        .collect()
}

pub fn mie_reference(
    kappa: f64,
    radius: f64,
    lambda: Complex,
    wave: &IncidentWave,
    directions: &[Vec3],
    lmax: usize,
) -> Result<MieResult> {
    if (wave.kappa() - kappa).abs() > 1e-15 * kappa {
        return Err(Error::InvalidInput("series wavenumber differs from the incident wave".into()));
    }
    if !(radius > 0.0) || lambda.norm() == 0.0 {
        return Err(Error::InvalidInput("series needs a positive radius and nonzero impedance".into()));
    }
    let coeffs = mie_coefficients(kappa, radius, lambda, lmax + 1);
    let prefactor = Complex::new(0.0, -4.0 * PI / kappa);
    let theta = wave.theta();
    let mut values = Vec::with_capacity(directions.len());
    let mut largest_sum = 0.0f64;
    for xhat in directions {
        kernels::check_unit(xhat)?;
        let p = legendre(lmax, vec3::dot(xhat, &theta).clamp(-1.0, 1.0));
        let sum: Complex = (0..=lmax).map(|l| coeffs[l] * ((2 * l + 1) as f64 * p[l])).sum();
        largest_sum = largest_sum.max(sum.norm());
        values.push(prefactor * sum);
    }
    let last = (2 * lmax + 1) as f64 * coeffs[lmax].norm();
    if !directions.is_empty() && last > 1e-12 * largest_sum {
        return Err(Error::SeriesNotConverged {
            last,
            sum: largest_sum,
        });
    }
    let remainder = (2 * lmax + 3) as f64 * coeffs[lmax + 1].norm() * 4.0 * PI / kappa;
    Ok(MieResult {
        grid: FarFieldGrid::new(*wave, directions.to_vec(), values)?,
        remainder,
    })
}

/// Series far field of a sphere centered at `center`: the origin result times
/// `exp(i kappa (theta - xhat) . center)`.
pub fn mie_reference_at(
    center: &Vec3,
    radius: f64,
    lambda: Complex,
    wave: &IncidentWave,
    directions: &[Vec3],
    lmax: usize,
) -> Result<MieResult> {
    let mut res = mie_reference(wave.kappa(), radius, lambda, wave, directions, lmax)?;
    let k = wave.kappa();
    for (u, xhat) in res.grid.values.iter_mut().zip(directions) {
        let shift = vec3::sub(&wave.theta(), xhat);
        *u *= Complex::from_polar(1.0, k * vec3::dot(&shift, center));
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::fibonacci_directions;

    fn wave(kappa: f64) -> IncidentWave {
        IncidentWave::new(kappa, [0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn small_sphere_matches_point_charge() {
        let (kappa, r, lambda) = (1.0, 0.01, Complex::new(-1.0, 0.0));
        let res = mie_reference(kappa, r, lambda, &wave(kappa), &fibonacci_directions(30), 8).unwrap();
        let q = lambda * (4.0 * PI * r * r) / (Complex::new(1.0, 0.0) - lambda * r);
        for u in &res.grid.values {
            assert!((u - q).norm() < 2.0 * kappa * r * q.norm(), "{u} vs {q}");
        }
        assert!(res.remainder < 1e-20);
    }

    #[test]
    fn truncation_too_short_is_reported() {
        let err = mie_reference(4.0, 0.6, Complex::new(-1.0, 0.0), &wave(4.0), &fibonacci_directions(5), 3);
        assert!(matches!(err, Err(Error::SeriesNotConverged { .. })));
    }

    #[test]
    fn approaches_sound_soft_as_impedance_grows() {
        let (kappa, r) = (1.0, 0.3);
        let dirs = fibonacci_directions(20);
        let soft: Vec<Complex> = {
            // Dirichlet limit: A_l = -j_l / h_l.
            let t = BesselTable::new(14, kappa * r);
            dirs.iter()
                .map(|x| {
                    let p = legendre(14, x[2]);
                    (0..=14)
                        .map(|l| -Complex::new(t.j[l], 0.0) / t.h(l) * ((2 * l + 1) as f64 * p[l]))
                        .sum::<Complex>()
                        * Complex::new(0.0, -4.0 * PI / kappa)
                })
                .collect()
        };
        let mut last = f64::INFINITY;
        for lambda in [1e1, 1e2, 1e3, 1e4] {
            let res = mie_reference(kappa, r, Complex::new(-lambda, 0.0), &wave(kappa), &dirs, 14).unwrap();
            let gap = res.grid.values.iter().zip(&soft).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(gap < last);
            last = gap;
        }
    }

    #[test]
    fn reciprocity() {
        let (kappa, r, lambda) = (2.0, 0.2, Complex::new(-1.5, 0.4));
        let theta = vec3::normalize(&[0.3, -0.5, 0.8]).unwrap();
        let xhat = vec3::normalize(&[-0.7, 0.1, 0.2]).unwrap();
        let w1 = IncidentWave::new(kappa, theta).unwrap();
        let w2 = IncidentWave::new(kappa, vec3::neg(&xhat)).unwrap();
        let center = [0.3, 0.1, -0.2];
        let a = mie_reference_at(&center, r, lambda, &w1, &[xhat], 14).unwrap().grid.values[0];
        let b = mie_reference_at(&center, r, lambda, &w2, &[vec3::neg(&theta)], 14).unwrap().grid.values[0];
        assert!((a - b).norm() < 1e-10 * a.norm());
    }
}
