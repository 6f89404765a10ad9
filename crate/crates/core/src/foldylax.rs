//! Point-scatterer (Foldy-Lax) model.
//!
//! Each obstacle becomes a monopole of strength `Q_m` at its center `z_m`.
//! The strengths solve
//!
//! ```text
//! Q_m + sum_{j != m} C_m Phi(z_m, z_j) Q_j = -C_m U^i(z_m)
//! ```
//!
//! which, divided by `-C_m`, is the complex-symmetric system `B Q = U^I` with
//! `B_mm = -1/C_m` and `B_mj = -Phi(z_m, z_j)`. The far field is
//! `U_inf(xhat) = sum_m exp(-i kappa xhat . z_m) Q_m`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{RegimeParams, ScattererCloud};
use crate::kernels::{self, phi_at_distance};
use crate::linalg::{self, Lu};
use crate::{vec3, Complex, IncidentWave, Matrix, Vec3};

/// Relative pivot threshold for the dense LU.
pub const PIVOT_TOL: f64 = 1e-14;
/// Largest accepted relative residual of a solve.
pub const RESIDUAL_LIMIT: f64 = 1e-10;
/// Smallest accepted `|-1 + lambda r|` for the spherical coefficient.
pub const SPHERICAL_POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientVariant {
    /// `C = -lambda |dD|`.
    General,
    /// `C = lambda |dD| / (-1 + lambda r)`, spheres only.
    Spherical,
}

impl std::fmt::Display for CoefficientVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::General => "general",
            Self::Spherical => "spherical",
        })
    }
}

impl std::str::FromStr for CoefficientVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Self::General),
            "spherical" => Ok(Self::Spherical),
            other => Err(Error::InvalidInput(format!("unknown coefficient variant {other:?}"))),
        }
    }
}

/// Size information an obstacle contributes to its coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BodySize {
    /// Sphere radius.
    Radius(f64),
    /// Surface area of a general shape.
    Area(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringCoefficient {
    pub value: Complex,
    pub variant: CoefficientVariant,
}

/// Scattering strength of one obstacle with impedance `lambda`.
pub fn coefficient(lambda: Complex, size: BodySize, variant: CoefficientVariant) -> Result<ScatteringCoefficient> {
    if lambda.norm() == 0.0 {
        return Err(Error::ZeroImpedance);
    }
    let area = match size {
        BodySize::Radius(r) => 4.0 * PI * r * r,
        BodySize::Area(s) => s,
    };
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::InvalidInput(format!("surface area must be positive, got {area}")));
    }
    let value = match variant {
        CoefficientVariant::General => -lambda * area,
        CoefficientVariant::Spherical => {
            let BodySize::Radius(r) = size else {
                return Err(Error::InvalidInput("the spherical coefficient needs a radius".into()));
            };
            let denom = lambda * r - 1.0;
            if denom.norm() < SPHERICAL_POLE_TOL {
                return Err(Error::SphericalPole(denom.norm()));
            }
            lambda * area / denom
        }
    };
    Ok(ScatteringCoefficient { value, variant })
}

/// Assembled system `B Q = U^I` together with the data that produced it.
#[derive(Debug, Clone)]
pub struct FoldyLaxSystem {
    pub matrix: Matrix,
    pub rhs: Vec<Complex>,
    pub coefficients: Vec<ScatteringCoefficient>,
    pub cloud: ScattererCloud,
    pub wave: IncidentWave,
    pub variant: CoefficientVariant,
}

impl FoldyLaxSystem {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }
}

pub fn assemble(cloud: &ScattererCloud, wave: &IncidentWave, variant: CoefficientVariant) -> Result<FoldyLaxSystem> {
    if variant == CoefficientVariant::Spherical && !cloud.is_spherical() {
        return Err(Error::InvalidInput("the spherical coefficient needs spherical obstacles".into()));
    }
    let m = cloud.len();
    let coefficients = (0..m)
        .map(|i| {
            let size = if cloud.is_spherical() {
                BodySize::Radius(cloud.radii()[i])
            } else {
                BodySize::Area(cloud.surface_area(i))
            };
            coefficient(cloud.impedances()[i], size, variant)
        })
        .collect::<Result<Vec<_>>>()?;

    let centers = cloud.centers();
    let kappa = wave.kappa();
    let rows: Vec<Vec<Complex>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        -coefficients[i].value.inv()
                    } else {
                        -phi_at_distance(kappa, vec3::dist(&centers[i], &centers[j]))
                    }
                })
                .collect()
        })
        .collect();
    let matrix = Matrix::from_row_major(m, m, rows.into_iter().flatten().collect());
    let rhs = centers.iter().map(|z| wave.at(z)).collect();
    Ok(FoldyLaxSystem {
        matrix,
        rhs,
        coefficients,
        cloud: cloud.clone(),
        wave: *wave,
        variant,
    })
}

/// Total charges and solve diagnostics.
#[derive(Debug, Clone)]
pub struct FoldyLaxSolution {
    pub charges: Vec<Complex>,
    /// `||B Q - U^I||_inf / ||U^I||_inf`.
    pub residual_inf: f64,
    /// Present when the cloud carries regime parameters.
    pub diagnostics: Option<InvertibilityReport>,
    pub centers: Vec<Vec3>,
    pub wave: IncidentWave,
    pub variant: CoefficientVariant,
}

/// Dense LU solve of `B Q = U^I`, with one step of iterative refinement when
/// the first residual exceeds `1e-13`.
pub fn solve(system: &FoldyLaxSystem) -> Result<FoldyLaxSolution> {
    let diagnostics = system
        .cloud
        .regime()
        .map(|r| invertibility_report(system, r))
        .transpose()?;
    let lu = match Lu::factor(&system.matrix, PIVOT_TOL) {
        Ok(lu) => lu,
        Err(e) => {
            if let Some(report) = &diagnostics {
                log::warn!("singular Foldy-Lax system; invertibility report: {report:?}");
            }
            return Err(e);
        }
    };
    let mut charges = lu.solve(&system.rhs);
    let mut residual = linalg::relative_residual(&system.matrix, &charges, &system.rhs);
    if residual > 1e-13 {
        let r: Vec<Complex> = system
            .matrix
            .mul_vec(&charges)
            .iter()
            .zip(&system.rhs)
            .map(|(ax, b)| b - ax)
            .collect();
        let delta = lu.solve(&r);
        charges.iter_mut().zip(&delta).for_each(|(q, d)| *q += d);
        residual = linalg::relative_residual(&system.matrix, &charges, &system.rhs);
    }
    if !(residual <= RESIDUAL_LIMIT) {
        return Err(Error::InaccurateSolve {
            residual,
            limit: RESIDUAL_LIMIT,
        });
    }
    Ok(FoldyLaxSolution {
        charges,
        residual_inf: residual,
        diagnostics,
        centers: system.cloud.centers().to_vec(),
        wave: system.wave,
        variant: system.variant,
    })
}

/// Far-field samples for one incident wave.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldGrid {
    pub wave: IncidentWave,
    pub directions: Vec<Vec3>,
    pub values: Vec<Complex>,
}

impl FarFieldGrid {
    pub fn new(wave: IncidentWave, directions: Vec<Vec3>, values: Vec<Complex>) -> Result<Self> {
        if directions.len() != values.len() {
            return Err(Error::InvalidInput("directions and values differ in length".into()));
        }
        for d in &directions {
            kernels::check_unit(d)?;
        }
        Ok(Self {
            wave,
            directions,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `U_inf(xhat) = sum_m exp(-i kappa xhat . z_m) Q_m`.
pub fn farfield(solution: &FoldyLaxSolution, directions: &[Vec3]) -> Result<FarFieldGrid> {
    let kappa = solution.wave.kappa();
    let values = directions
        .iter()
        .map(|xhat| {
            solution
                .centers
                .iter()
                .zip(&solution.charges)
                .try_fold(Complex::new(0.0, 0.0), |acc, (z, q)| {
                    Ok(acc + kernels::farfield_kernel(kappa, xhat, z)? * q)
                })
        })
        .collect::<Result<Vec<_>>>()?;
    FarFieldGrid::new(solution.wave, directions.to_vec(), values)
}

/// Default direction grid size for far-field sampling.
pub const DEFAULT_DIRECTIONS: usize = 200;

/// Which sign case of the invertibility lemma applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSignCase {
    /// `Re lambda_{m,0} < 0` for every obstacle.
    NegRealLambda,
    /// `Re lambda_{m,0} > 0` for every obstacle.
    PosRealLambda,
    /// Mixed signs; rows with positive real part are negated.
    Mixed,
}

/// Sufficient invertibility conditions for `B`, evaluated on an assembled system.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertibilityReport {
    /// Frobenius norm of the real part of the off-diagonal coupling `B_n`.
    pub frobenius_offdiag_real: f64,
    /// `sqrt(2 M_max) / (pi d^(s/t))` with the cloud's minimum distance `d`.
    pub bound_rhs: f64,
    /// `sqrt(2 M_max) / pi * a^(-s/t)`, the a-priori bound on `frobenius_offdiag_real`.
    pub frobenius_bound: f64,
    /// Same bound with `M_max` replaced by `M a^s`.
    pub frobenius_bound_actual: f64,
    /// `min Re C / max |C|^2 > bound_rhs`.
    pub condition_neg_re: bool,
    /// `min Re(-C) / max |C|^2 > bound_rhs`.
    pub condition_pos_re: bool,
    /// The condition of the applicable case (`min |Re C|` after sign flips for mixed signs).
    pub condition_applicable: bool,
    /// `min_{m != j} cos(kappa |z_m - z_j|)`; `1` for a single obstacle.
    pub gamma: f64,
    /// `(5 pi / 3) min Re C / max |C|^2 > gamma / d`, only meaningful when `gamma >= 0`.
    pub cosine_condition: Option<bool>,
    pub applicable_case: LambdaSignCase,
    /// Lemma bound on `sum |Q_m|^2` when the applicable condition holds.
    pub charge_energy_bound: Option<f64>,
}

pub fn invertibility_report(system: &FoldyLaxSystem, regime: &RegimeParams) -> Result<InvertibilityReport> {
    let m = system.len();
    let cloud = &system.cloud;
    let c: Vec<Complex> = system.coefficients.iter().map(|c| c.value).collect();

    let mut frob2 = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let v = -system.matrix.get(i, j).re;
                frob2 += v * v;
            }
        }
    }
    let frobenius_offdiag_real = frob2.sqrt();

    let exponent = if regime.s == 0.0 { 0.0 } else { regime.s / regime.t };
    let d = cloud.min_distance();
    let bound_rhs = if m == 1 {
        0.0
    } else {
        (2.0 * regime.m_max).sqrt() / (PI * d.powf(exponent))
    };
    let frobenius_bound = (2.0 * regime.m_max).sqrt() / PI * regime.a.powf(-exponent);
    let m_actual = m as f64 * regime.a.powf(regime.s);
    let frobenius_bound_actual = (2.0 * m_actual).sqrt() / PI * regime.a.powf(-exponent);

    let cmax2 = c.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let min_re = c.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    let min_neg_re = c.iter().map(|v| -v.re).fold(f64::INFINITY, f64::min);
    let min_abs_re = c.iter().map(|v| v.re.abs()).fold(f64::INFINITY, f64::min);

    let lambdas = cloud.impedances();
    let applicable_case = if lambdas.iter().all(|l| l.re < 0.0) {
        LambdaSignCase::NegRealLambda
    } else if lambdas.iter().all(|l| l.re > 0.0) {
        LambdaSignCase::PosRealLambda
    } else {
        LambdaSignCase::Mixed
    };

    let single = m == 1;
    let condition_neg_re = single || min_re / cmax2 > bound_rhs;
    let condition_pos_re = single || min_neg_re / cmax2 > bound_rhs;
    let margin = match applicable_case {
        LambdaSignCase::NegRealLambda => min_re / cmax2 - bound_rhs,
        LambdaSignCase::PosRealLambda => min_neg_re / cmax2 - bound_rhs,
        LambdaSignCase::Mixed => min_abs_re / cmax2 - bound_rhs,
    };
    let condition_applicable = single || margin > 0.0;

    let kappa = system.wave.kappa();
    let centers = cloud.centers();
    let mut gamma = 1.0f64;
    for i in 0..m {
        for j in i + 1..m {
            gamma = gamma.min((kappa * vec3::dist(&centers[i], &centers[j])).cos());
        }
    }
    let cosine_condition = (gamma >= 0.0).then(|| single || 5.0 * PI / 3.0 * min_re / cmax2 > gamma / d);

    let charge_energy_bound = (margin > 0.0).then(|| {
        let u2: f64 = system.rhs.iter().map(|u| u.norm_sqr()).sum();
        4.0 * u2 / (margin * margin)
    });

    Ok(InvertibilityReport {
        frobenius_offdiag_real,
        bound_rhs,
        frobenius_bound,
        frobenius_bound_actual,
        condition_neg_re,
        condition_pos_re,
        condition_applicable,
        gamma,
        cosine_condition,
        applicable_case,
        charge_energy_bound,
    })
}

/// `max_m |Q_m| <= c_tilde a^(2 - beta)`.
pub fn charge_bound_check(solution: &FoldyLaxSolution, regime: &RegimeParams, c_tilde: f64) -> bool {
    max_charge(solution) <= c_tilde * regime.a.powf(2.0 - regime.beta)
}

/// `max_m |Q_m|`.
pub fn max_charge(solution: &FoldyLaxSolution) -> f64 {
    solution.charges.iter().map(|q| q.norm()).fold(0.0, f64::max)
}

/// Assembles and solves in one step.
pub fn solve_cloud(cloud: &ScattererCloud, wave: &IncidentWave, variant: CoefficientVariant) -> Result<FoldyLaxSolution> {
    solve(&assemble(cloud, wave, variant)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_grid_cloud;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn wave(kappa: f64, theta: Vec3) -> IncidentWave {
        IncidentWave::from_direction(kappa, theta, 2.0 * PI).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let g = coefficient(c(1.0, 0.0), BodySize::Radius(1.0), CoefficientVariant::General).unwrap();
        assert!((g.value - c(-4.0 * PI, 0.0)).norm() < 1e-14);
        assert!(matches!(
            coefficient(c(1.0, 0.0), BodySize::Radius(1.0), CoefficientVariant::Spherical),
            Err(Error::SphericalPole(_))
        ));
        let s = coefficient(c(-2.0, 0.0), BodySize::Radius(0.5), CoefficientVariant::Spherical).unwrap();
        assert!((s.value - c(PI, 0.0)).norm() < 1e-14);
        assert!(matches!(
            coefficient(c(0.0, 0.0), BodySize::Radius(0.5), CoefficientVariant::General),
            Err(Error::ZeroImpedance)
        ));
        assert!(coefficient(c(1.0, 0.0), BodySize::Area(2.0), CoefficientVariant::Spherical).is_err());
    }

    #[test]
    fn general_coefficient_scaling() {
        let (lambda0, beta) = (c(-0.7, 0.2), 0.4);
        for a in [0.1, 0.05, 0.01] {
            let lambda = lambda0 * f64::powf(a, -beta);
            let v = coefficient(lambda, BodySize::Radius(a / 2.0), CoefficientVariant::General).unwrap();
            let expect = lambda0.norm() * PI * f64::powf(a, 2.0 - beta);
            assert!((v.value.norm() - expect).abs() < 1e-14 * expect);
        }
    }

    #[test]
    fn single_scatterer_closed_form() {
        let z = [0.3, -0.1, 0.2];
        let lambda = c(-1.5, 0.3);
        let r = 0.05;
        let cloud = ScattererCloud::spheres(vec![z], vec![r], vec![lambda], None).unwrap();
        let w = wave(1.3, [0.0, 0.6, 0.8]);
        let sys = assemble(&cloud, &w, CoefficientVariant::General).unwrap();
        let area = 4.0 * PI * r * r;
        assert!((sys.matrix.get(0, 0) - (lambda * area).inv()).norm() < 1e-10);
        let sol = solve(&sys).unwrap();
        let expect = lambda * area * w.at(&z);
        assert!((sol.charges[0] - expect).norm() < 1e-14 * expect.norm());

        let sol = solve_cloud(&cloud, &w, CoefficientVariant::Spherical).unwrap();
        let expect = lambda * area / (c(1.0, 0.0) - lambda * r) * w.at(&z);
        assert!((sol.charges[0] - expect).norm() < 1e-14 * expect.norm());
    }

    #[test]
    fn matrix_structure() {
        let imp = vec![c(-1.0, 0.0); 3];
        let cloud = ScattererCloud::spheres(
            vec![[0.0; 3], [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]],
            vec![0.01; 3],
            imp,
            None,
        )
        .unwrap();
        let sys = assemble(&cloud, &wave(2.0, [0.0, 0.0, 1.0]), CoefficientVariant::General).unwrap();
        assert_eq!(sys.matrix.get(0, 1), sys.matrix.get(1, 2));
        assert_eq!(sys.matrix, sys.matrix.transpose());
    }

    #[test]
    fn far_field_single_at_origin_is_the_charge() {
        let cloud = ScattererCloud::spheres(vec![[0.0; 3]], vec![0.05], vec![c(-1.0, 0.0)], None).unwrap();
        let sol = solve_cloud(&cloud, &wave(1.0, [1.0, 0.0, 0.0]), CoefficientVariant::General).unwrap();
        let grid = farfield(&sol, &crate::special::fibonacci_directions(20)).unwrap();
        assert!(grid.values.iter().all(|u| *u == sol.charges[0]));
    }

    #[test]
    fn far_field_single_off_origin_has_constant_modulus() {
        let cloud = ScattererCloud::spheres(vec![[0.4, 0.2, -1.0]], vec![0.05], vec![c(-1.0, 0.5)], None).unwrap();
        let sol = solve_cloud(&cloud, &wave(3.0, [1.0, 0.0, 0.0]), CoefficientVariant::General).unwrap();
        let grid = farfield(&sol, &crate::special::fibonacci_directions(50)).unwrap();
        let q = sol.charges[0].norm();
        assert!(grid.values.iter().all(|u| (u.norm() - q).abs() < 1e-15 * q));
        assert!(matches!(farfield(&sol, &[[1.0, 1.0, 1.0]]), Err(Error::NonUnitDirection(_))));
    }

    #[test]
    fn zero_impedance_rejected_at_assembly() {
        let cloud = ScattererCloud::spheres(vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![0.1; 2], vec![c(0.0, 0.0); 2], None)
            .unwrap();
        assert!(matches!(
            assemble(&cloud, &wave(1.0, [1.0, 0.0, 0.0]), CoefficientVariant::General),
            Err(Error::ZeroImpedance)
        ));
    }

    #[test]
    fn report_single_scatterer() {
        let regime = RegimeParams::new(0.1, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, c(-1.0, 0.0));
        let cloud = generate_grid_cloud(&regime, 1.0, 0.0, 0).unwrap();
        let sys = assemble(&cloud, &wave(1.0, [0.0, 0.0, 1.0]), CoefficientVariant::General).unwrap();
        let rep = invertibility_report(&sys, &regime).unwrap();
        assert_eq!(rep.frobenius_offdiag_real, 0.0);
        assert!(rep.condition_neg_re && rep.condition_pos_re && rep.condition_applicable);
        assert_eq!(rep.applicable_case, LambdaSignCase::NegRealLambda);
    }

    #[test]
    fn report_mixed_signs() {
        let regime = RegimeParams::new(0.1, 1.0, 1.0 / 3.0, 0.0, 1.0, 1.0, 2.0, c(-1.0, 0.0));
        let cloud = generate_grid_cloud(&regime, 5.0, 0.0, 0).unwrap();
        let mut imp = cloud.impedances().to_vec();
        imp[3] = c(1.0, 0.0);
        let cloud = cloud.with_impedances(imp).unwrap();
        let sys = assemble(&cloud, &wave(1.0, [0.0, 0.0, 1.0]), CoefficientVariant::General).unwrap();
        let rep = invertibility_report(&sys, &regime).unwrap();
        assert_eq!(rep.applicable_case, LambdaSignCase::Mixed);
        assert!(!rep.condition_neg_re && !rep.condition_pos_re);
    }

    #[test]
    fn charge_bound_single_sphere() {
        let lambda0 = c(-1.0, 0.0);
        let regime = RegimeParams::new(0.1, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, lambda0);
        let cloud = generate_grid_cloud(&regime, 1.0, 0.0, 0).unwrap();
        let sol = solve_cloud(&cloud, &wave(1.0, [0.0, 0.0, 1.0]), CoefficientVariant::General).unwrap();
        assert!((max_charge(&sol) - PI * 0.01).abs() < 1e-15);
        assert!(charge_bound_check(&sol, &regime, PI * lambda0.norm()));
        assert!(!charge_bound_check(&sol, &regime, 0.9 * PI));

        let half = regime.with_a(0.05);
        let cloud = generate_grid_cloud(&half, 1.0, 0.0, 0).unwrap();
        let sol_half = solve_cloud(&cloud, &wave(1.0, [0.0, 0.0, 1.0]), CoefficientVariant::General).unwrap();
        assert!((max_charge(&sol_half) * 4.0 - max_charge(&sol)).abs() < 1e-12 * max_charge(&sol));
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("general".parse::<CoefficientVariant>().unwrap(), CoefficientVariant::General);
        assert_eq!(CoefficientVariant::Spherical.to_string(), "spherical");
        assert!("other".parse::<CoefficientVariant>().is_err());
    }
}
