//! Coupled single-layer boundary integral system for several spheres.
//!
//! With `U^s = sum_j S_j sigma_j`, the impedance condition on sphere `m` reads
//!
//! ```text
//! (-1/2 + D*_mm + lambda_m S_mm) sigma_m
//!     + sum_{j != m} (D*_mj + lambda_m S_mj) sigma_j = -(d_nu + lambda_m) U^i
//! ```
//!
//! Densities are expanded in orthonormal harmonics of the direction from the
//! sphere's center, so diagonal blocks are diagonal. Off-diagonal blocks use
//! the product rule on both spheres; the kernel is smooth because the spheres
//! are disjoint.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::spectra::{sphere_operator_spectra, SphereSpectra};
use crate::error::{Error, Result};
use crate::foldylax::FarFieldGrid;
use crate::geometry::ScattererCloud;
use crate::linalg::{self, Lu};
use crate::special::{harmonic_count, spherical_harmonics_at, spherical_j, SphereQuadrature};
use crate::{kernels, vec3, Complex, IncidentWave, Matrix, Vec3};

/// Largest accepted relative residual of the oracle solve.
pub const BIE_RESIDUAL_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BieSettings {
    /// Harmonic truncation degree `L`.
    pub l_max: usize,
    /// Gauss-Legendre points in the polar angle; the azimuth uses twice as many.
    pub quad_order: usize,
    /// Largest admissible system dimension `M (L+1)^2`.
    pub max_dimension: usize,
}

impl Default for BieSettings {
    fn default() -> Self {
        Self {
            l_max: 12,
            quad_order: 24,
            max_dimension: 4000,
        }
    }
}

impl BieSettings {
    pub fn dimension(&self, spheres: usize) -> usize {
        spheres * harmonic_count(self.l_max)
    }

    pub fn check_feasible(&self, spheres: usize) -> Result<()> {
        let dimension = self.dimension(spheres);
        if dimension > self.max_dimension {
            return Err(Error::InfeasibleOracle {
                dimension,
                cap: self.max_dimension,
            });
        }
        Ok(())
    }
}

/// Harmonic coefficients of the layer density on one sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceDensity {
    pub sphere_index: usize,
    pub l_max: usize,
    /// Ordered by [`crate::special::harmonic_index`].
    pub coeffs: Vec<Complex>,
}

impl SurfaceDensity {
    /// `||sigma||_{L^2(dD)}` on a sphere of radius `radius`.
    pub fn l2_norm(&self, radius: f64) -> f64 {
        radius * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Density value in the unit direction `dir` from the sphere's center.
    pub fn evaluate(&self, dir: &Vec3) -> Complex {
        spherical_harmonics_at(self.l_max, dir)
            .iter()
            .zip(&self.coeffs)
            .map(|(y, c)| y * c)
            .sum()
    }
}

/// Block system of the oracle.
#[derive(Debug, Clone)]
pub struct BieSystem {
    pub settings: BieSettings,
    pub cloud: ScattererCloud,
    pub wave: IncidentWave,
    pub spectra: Vec<SphereSpectra>,
    /// Diagonal of each self block: `-1/2 + d*_l + lambda_m s_l` per harmonic.
    pub diagonal: Vec<Vec<Complex>>,
    /// Row-major `M x M` grid of coupling blocks, `None` on the diagonal.
    pub couplings: Vec<Option<Matrix>>,
    pub rhs: Vec<Vec<Complex>>,
    /// Neumann-series smallness proxy for impedances with negative imaginary
    /// part; must stay below one.
    pub negative_imaginary_proxy: Option<f64>,
}

impl BieSystem {
    pub fn dimension(&self) -> usize {
        self.settings.dimension(self.cloud.len())
    }

    pub fn coupling(&self, m: usize, j: usize) -> Option<&Matrix> {
        self.couplings[m * self.cloud.len() + j].as_ref()
    }

    /// The full dense matrix and right-hand side.
    pub fn dense(&self) -> (Matrix, Vec<Complex>) {
        let nb = harmonic_count(self.settings.l_max);
        let m_count = self.cloud.len();
        let n = m_count * nb;
        let mut a = Matrix::zeros(n, n);
        for m in 0..m_count {
            for (k, v) in self.diagonal[m].iter().enumerate() {
                a.set(m * nb + k, m * nb + k, *v);
            }
            for j in 0..m_count {
                if let Some(block) = self.coupling(m, j) {
                    for r in 0..nb {
                        for c in 0..nb {
                            a.set(m * nb + r, j * nb + c, block.get(r, c));
                        }
                    }
                }
            }
        }
        let rhs = self.rhs.iter().flatten().copied().collect();
        (a, rhs)
    }
}

/// Quadrature data on the unit sphere shared by all blocks.
struct Nodes {
    quad: SphereQuadrature,
    /// `Y_b(xi_p)`, row per node.
    harmonics: Vec<Vec<Complex>>,
}

impl Nodes {
    fn new(settings: &BieSettings) -> Self {
        let quad = SphereQuadrature::new(settings.quad_order);
        let harmonics = quad
            .points
            .iter()
            .map(|p| spherical_harmonics_at(settings.l_max, p))
            .collect();
        Self { quad, harmonics }
    }

    /// Galerkin projection `int conj(Y_a) g` on the unit sphere.
    fn project(&self, values: &[Complex], nb: usize) -> Vec<Complex> {
        let mut out = vec![Complex::new(0.0, 0.0); nb];
        for ((y, w), g) in self.harmonics.iter().zip(&self.quad.weights).zip(values) {
            let gw = g * w;
            for (o, ya) in out.iter_mut().zip(y) {
                *o += ya.conj() * gw;
            }
        }
        out
    }
}

pub fn assemble_bie(cloud: &ScattererCloud, wave: &IncidentWave, settings: &BieSettings) -> Result<BieSystem> {
    if !cloud.is_spherical() {
        return Err(Error::InvalidInput("the oracle handles spherical obstacles only".into()));
    }
    if settings.quad_order <= settings.l_max {
        return Err(Error::InvalidInput(format!(
            "quadrature order {} must exceed the harmonic degree {}",
            settings.quad_order, settings.l_max
        )));
    }
    settings.check_feasible(cloud.len())?;
    let kappa = wave.kappa();
    let m_count = cloud.len();
    let nb = harmonic_count(settings.l_max);
    let spectra = cloud
        .radii()
        .iter()
        .map(|r| sphere_operator_spectra(kappa, *r, settings.l_max))
        .collect::<Result<Vec<_>>>()?;
    let lambdas = cloud.impedances();
    let degree_of: Vec<usize> = (0..=settings.l_max).flat_map(|l| std::iter::repeat_n(l, 2 * l + 1)).collect();
    let diagonal: Vec<Vec<Complex>> = (0..m_count)
        .map(|m| {
            degree_of
                .iter()
                .map(|&l| spectra[m].impedance_eigenvalue(l, lambdas[m]))
                .collect()
        })
        .collect();

    let nodes = Nodes::new(settings);
    let rhs: Vec<Vec<Complex>> = (0..m_count)
        .map(|m| {
            let (z, r, lambda) = (cloud.centers()[m], cloud.radii()[m], lambdas[m]);
            let trace: Vec<Complex> = nodes
                .quad
                .points
                .iter()
                .map(|xi| {
                    let x = vec3::add(&z, &vec3::scale(xi, r));
                    let u = wave.at(&x);
                    -(Complex::new(0.0, kappa * vec3::dot(&wave.theta(), xi)) + lambda) * u
                })
                .collect();
            nodes.project(&trace, nb)
        })
        .collect();

    let pairs: Vec<(usize, usize)> = (0..m_count)
        .flat_map(|m| (0..m_count).map(move |j| (m, j)))
        .collect();
    let couplings = pairs
        .iter()
        .map(|&(m, j)| (m != j).then(|| coupling_block(cloud, kappa, m, j, &nodes, nb)))
        .collect();

    let negative_imaginary_proxy = negative_imaginary_proxy(&spectra, lambdas);
    if let Some(p) = negative_imaginary_proxy {
        if p >= 1.0 {
            log::warn!("impedance with negative imaginary part: Neumann-series proxy {p:.3e} >= 1");
        }
    }

    Ok(BieSystem {
        settings: *settings,
        cloud: cloud.clone(),
        wave: *wave,
        spectra,
        diagonal,
        couplings,
        rhs,
        negative_imaginary_proxy,
    })
}

/// `(D*_mj + lambda_m S_mj)` from harmonics on sphere `j` to harmonics on sphere `m`.
fn coupling_block(cloud: &ScattererCloud, kappa: f64, m: usize, j: usize, nodes: &Nodes, nb: usize) -> Matrix {
    let (zm, rm, lambda) = (cloud.centers()[m], cloud.radii()[m], cloud.impedances()[m]);
    let (zj, rj) = (cloud.centers()[j], cloud.radii()[j]);
    let sources: Vec<Vec3> = nodes.quad.points.iter().map(|e| vec3::add(&zj, &vec3::scale(e, rj))).collect();
    // Source weights times harmonics, with the surface element R_j^2.
    let weighted: Vec<Vec<Complex>> = nodes
        .harmonics
        .iter()
        .zip(&nodes.quad.weights)
        .map(|(y, w)| y.iter().map(|v| v * (w * rj * rj)).collect())
        .collect();
    let i_kappa = Complex::new(0.0, kappa);

    // traces[p][b]: (d_nu + lambda_m) S_j[Y_b] at node p of sphere m.
    let traces: Vec<Vec<Complex>> = nodes
        .quad
        .points
        .par_iter()
        .map(|xi| {
            let x = vec3::add(&zm, &vec3::scale(xi, rm));
            let mut acc = vec![Complex::new(0.0, 0.0); nb];
            for (y, wy) in sources.iter().zip(&weighted) {
                let d = vec3::sub(&x, y);
                let r = vec3::norm(&d);
                let phi = kernels::phi_at_distance(kappa, r);
                let dn = phi * (i_kappa - 1.0 / r) * (vec3::dot(&d, xi) / r);
                let k = dn + lambda * phi;
                for (a, v) in acc.iter_mut().zip(wy) {
                    *a += k * v;
                }
            }
            acc
        })
        .collect();

    let mut block = Matrix::zeros(nb, nb);
    for ((y, w), trace) in nodes.harmonics.iter().zip(&nodes.quad.weights).zip(&traces) {
        for (a, ya) in y.iter().enumerate() {
            let ca = ya.conj() * w;
            for (b, t) in trace.iter().enumerate() {
                block.set(a, b, block.get(a, b) + ca * t);
            }
        }
    }
    block
}

/// `(Im lambda)_- ||S|| ||(-1/2 + D* + Re(lambda) S)^{-1}||` from the diagonal
/// blocks, maximized over spheres; `None` when no impedance has `Im < 0`.
fn negative_imaginary_proxy(spectra: &[SphereSpectra], lambdas: &[Complex]) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for (spectrum, lambda) in spectra.iter().zip(lambdas) {
        if lambda.im >= 0.0 {
            continue;
        }
        let shifted = Complex::new(lambda.re, 0.0);
        let s_norm = spectrum.single_layer.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let inv_norm = (0..=spectrum.degree())
            .map(|l| 1.0 / spectrum.impedance_eigenvalue(l, shifted).norm())
            .fold(0.0, f64::max);
        let p = -lambda.im * s_norm * inv_norm;
        worst = Some(worst.map_or(p, |w: f64| w.max(p)));
    }
    worst
}

/// Dense LU solve of the block system.
pub fn solve_bie(system: &BieSystem) -> Result<Vec<SurfaceDensity>> {
    let (a, b) = system.dense();
    let lu = Lu::factor(&a, 1e-14)?;
    let x = lu.solve(&b);
    let residual = linalg::relative_residual(&a, &x, &b);
    if residual > BIE_RESIDUAL_LIMIT {
        return Err(Error::InaccurateSolve {
            residual,
            limit: BIE_RESIDUAL_LIMIT,
        });
    }
    let nb = harmonic_count(system.settings.l_max);
    Ok(x.chunks(nb)
        .enumerate()
        .map(|(m, c)| SurfaceDensity {
            sphere_index: m,
            l_max: system.settings.l_max,
            coeffs: c.to_vec(),
        })
        .collect())
}

/// Relative residual of densities against the assembled system.
pub fn bie_residual(system: &BieSystem, densities: &[SurfaceDensity]) -> f64 {
    let (a, b) = system.dense();
    let x: Vec<Complex> = densities.iter().flat_map(|d| d.coeffs.iter().copied()).collect();
    linalg::relative_residual(&a, &x, &b)
}

/// `U_inf(xhat) = sum_m int exp(-i kappa xhat . s) sigma_m(s) ds`, evaluated
/// with `int exp(-i k R xhat . e) Y_lm(e) de = 4 pi (-i)^l j_l(k R) Y_lm(xhat)`.
pub fn bie_farfield(
    densities: &[SurfaceDensity],
    cloud: &ScattererCloud,
    wave: &IncidentWave,
    directions: &[Vec3],
) -> Result<FarFieldGrid> {
    if densities.len() != cloud.len() {
        return Err(Error::InvalidInput("one density per sphere is required".into()));
    }
    let kappa = wave.kappa();
    let per_sphere: Vec<(Vec<f64>, usize)> = densities
        .iter()
        .zip(cloud.radii())
        .map(|(d, r)| (spherical_j(d.l_max, kappa * r), d.l_max))
        .collect();
    let mut values = Vec::with_capacity(directions.len());
    for xhat in directions {
        kernels::check_unit(xhat)?;
        let mut total = Complex::new(0.0, 0.0);
        for ((density, (jl, l_max)), (z, r)) in densities
            .iter()
            .zip(&per_sphere)
            .zip(cloud.centers().iter().zip(cloud.radii()))
        {
            let y = spherical_harmonics_at(*l_max, xhat);
            let mut sum = Complex::new(0.0, 0.0);
            let mut phase = Complex::new(1.0, 0.0);
            let mut idx = 0;
            for (l, jv) in jl.iter().enumerate() {
                let mut deg = Complex::new(0.0, 0.0);
                for _ in 0..2 * l + 1 {
                    deg += density.coeffs[idx] * y[idx];
                    idx += 1;
                }
                sum += phase * jv * deg;
                phase *= Complex::new(0.0, -1.0);
            }
            total += kernels::farfield_kernel(kappa, xhat, z)? * sum * (4.0 * PI * r * r);
        }
        values.push(total);
    }
    FarFieldGrid::new(*wave, directions.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::harmonic_index;

    fn wave(kappa: f64, theta: Vec3) -> IncidentWave {
        IncidentWave::from_direction(kappa, theta, 2.0 * PI).unwrap()
    }

    fn pair(separation: f64, r: f64, lambda: Complex) -> ScattererCloud {
        ScattererCloud::spheres(
            vec![[0.0; 3], [separation, 0.0, 0.0]],
            vec![r, r],
            vec![lambda, lambda],
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_sphere_is_diagonal() {
        let lambda = Complex::new(-1.0, 0.2);
        let cloud = ScattererCloud::spheres(vec![[0.1, 0.0, 0.0]], vec![0.05], vec![lambda], None).unwrap();
        let settings = BieSettings {
            l_max: 6,
            quad_order: 12,
            ..Default::default()
        };
        let sys = assemble_bie(&cloud, &wave(1.0, [0.0, 0.0, 1.0]), &settings).unwrap();
        assert!(sys.coupling(0, 0).is_none());
        let dens = solve_bie(&sys).unwrap();
        for (k, c) in dens[0].coeffs.iter().enumerate() {
            let expect = sys.rhs[0][k] / sys.diagonal[0][k];
            assert!((c - expect).norm() <= 1e-14 * expect.norm().max(1e-300));
        }
        assert!(dens[0].coeffs[0].norm() > dens[0].coeffs[harmonic_index(1, 0)].norm());
    }

    #[test]
    fn zero_incident_gives_zero_density() {
        let cloud = pair(0.5, 0.05, Complex::new(-1.0, 0.0));
        let settings = BieSettings {
            l_max: 4,
            quad_order: 8,
            ..Default::default()
        };
        let mut sys = assemble_bie(&cloud, &wave(1.0, [0.0, 0.0, 1.0]), &settings).unwrap();
        sys.rhs.iter_mut().flatten().for_each(|v| *v = Complex::new(0.0, 0.0));
        let dens = solve_bie(&sys).unwrap();
        assert!(dens.iter().flat_map(|d| &d.coeffs).all(|c| c.norm() == 0.0));
        let grid = bie_farfield(&dens, &cloud, &sys.wave, &crate::special::fibonacci_directions(10)).unwrap();
        assert!(grid.values.iter().all(|u| u.norm() == 0.0));
    }

    #[test]
    fn coupling_decays_with_distance() {
        let settings = BieSettings {
            l_max: 3,
            quad_order: 8,
            ..Default::default()
        };
        let w = wave(1.0, [0.0, 0.0, 1.0]);
        let lambda = Complex::new(-1.0, 0.0);
        let norms: Vec<f64> = [5.0, 10.0, 20.0]
            .iter()
            .map(|&d| {
                let sys = assemble_bie(&pair(d, 0.1, lambda), &w, &settings).unwrap();
                sys.coupling(0, 1).unwrap().norm_frobenius() * d
            })
            .collect();
        assert!((norms[0] / norms[2] - 1.0).abs() < 0.05, "{norms:?}");
    }

    #[test]
    fn infeasible_and_invalid_settings() {
        let cloud = pair(0.5, 0.05, Complex::new(-1.0, 0.0));
        let settings = BieSettings {
            l_max: 12,
            quad_order: 24,
            max_dimension: 200,
        };
        assert!(matches!(
            assemble_bie(&cloud, &wave(1.0, [0.0, 0.0, 1.0]), &settings),
            Err(Error::InfeasibleOracle { dimension: 338, cap: 200 })
        ));
        let bad = BieSettings {
            l_max: 8,
            quad_order: 8,
            ..Default::default()
        };
        assert!(assemble_bie(&cloud, &wave(1.0, [0.0, 0.0, 1.0]), &bad).is_err());
    }

    #[test]
    fn resonance_guard_applies() {
        let cloud = ScattererCloud::spheres(vec![[0.0; 3]], vec![0.45], vec![Complex::new(-1.0, 0.0)], None).unwrap();
        let w = IncidentWave::from_direction(6.0, [0.0, 0.0, 1.0], 10.0).unwrap();
        assert!(matches!(
            assemble_bie(&cloud, &w, &BieSettings::default()),
            Err(Error::ResonanceGuard { .. })
        ));
    }

    #[test]
    fn negative_imaginary_impedance_reports_proxy() {
        let cloud = ScattererCloud::spheres(vec![[0.0; 3]], vec![0.05], vec![Complex::new(-1.0, -0.5)], None).unwrap();
        let settings = BieSettings {
            l_max: 4,
            quad_order: 8,
            ..Default::default()
        };
        let sys = assemble_bie(&cloud, &wave(1.0, [0.0, 0.0, 1.0]), &settings).unwrap();
        let p = sys.negative_imaginary_proxy.unwrap();
        assert!(p > 0.0 && p < 1.0, "{p}");
        let pos = cloud.with_impedances(vec![Complex::new(-1.0, 0.5)]).unwrap();
        assert!(assemble_bie(&pos, &sys.wave, &settings).unwrap().negative_imaginary_proxy.is_none());
    }
}
