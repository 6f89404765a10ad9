//! Error measurement between the point-scatterer model and an oracle, rate
//! fitting and regime sweeps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::foldylax::{self, CoefficientVariant, FarFieldGrid, InvertibilityReport};
use crate::geometry::{generate_grid_cloud, RegimeParams, ScattererCloud};
use crate::oracle::{assemble_bie, bie, bie_farfield, mie, solve_bie, BieSettings};
use crate::{Complex, IncidentWave, Vec3};

/// Errors below this level sit at the oracle's noise floor and are not fitted.
pub const NOISE_FLOOR: f64 = 1e-11;

/// Sup-norm discrepancy between two far-field grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldError {
    pub sup: f64,
    /// Index of the direction where the maximum is attained.
    pub argmax: usize,
    pub direction: Vec3,
}

fn check_grids(a: &FarFieldGrid, b: &FarFieldGrid) -> Result<()> {
    if a.wave != b.wave {
        return Err(Error::GridMismatch("incident waves differ".into()));
    }
    if a.directions.len() != b.directions.len() {
        return Err(Error::GridMismatch(format!(
            "{} versus {} directions",
            a.directions.len(),
            b.directions.len()
        )));
    }
    if let Some(i) = a.directions.iter().zip(&b.directions).position(|(x, y)| x != y) {
        return Err(Error::GridMismatch(format!("direction {i} differs")));
    }
    Ok(())
}

/// `max_xhat |U_fl - U_oracle|` over the shared direction grid.
pub fn farfield_error(fl: &FarFieldGrid, oracle: &FarFieldGrid) -> Result<f64> {
    farfield_error_detail(fl, oracle).map(|e| e.sup)
}

pub fn farfield_error_detail(fl: &FarFieldGrid, oracle: &FarFieldGrid) -> Result<FarFieldError> {
    check_grids(fl, oracle)?;
    let mut best = FarFieldError {
        sup: 0.0,
        argmax: 0,
        direction: fl.directions.first().copied().unwrap_or([0.0, 0.0, 1.0]),
    };
    for (i, (u, v)) in fl.values.iter().zip(&oracle.values).enumerate() {
        let e = (u - v).norm();
        if e > best.sup {
            best = FarFieldError {
                sup: e,
                argmax: i,
                direction: fl.directions[i],
            };
        }
    }
    Ok(best)
}

/// Expected decay exponent of the far-field error.
pub fn predicted_slope(s: f64, beta: f64, variant: CoefficientVariant) -> f64 {
    match variant {
        CoefficientVariant::General => 3.0 - s - 2.0 * beta,
        CoefficientVariant::Spherical => 3.0 - s - beta,
    }
}

/// Least-squares fit of `log error = slope log a + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// All `(a, error)` pairs, including those below the noise floor.
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub predicted_slope: f64,
}

impl RateFit {
    /// Fits the samples above [`NOISE_FLOOR`]. Needs three samples in total and
    /// two above the floor.
    pub fn fit(samples: Vec<(f64, f64)>, predicted_slope: f64) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::InsufficientSamples {
                needed: 3,
                got: samples.len(),
            });
        }
        if samples.iter().any(|(a, e)| !(*a > 0.0) || !(*e >= 0.0)) {
            return Err(Error::InvalidInput("fit samples need a > 0 and finite errors >= 0".into()));
        }
        let used: Vec<(f64, f64)> = samples
            .iter()
            .filter(|(_, e)| *e >= NOISE_FLOOR)
            .map(|(a, e)| (a.ln(), e.ln()))
            .collect();
        if used.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: used.len(),
            });
        }
        let n = used.len() as f64;
        let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
        let my = used.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
        if !(sxx > 0.0) {
            return Err(Error::InvalidInput("fit needs distinct a-values".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
        Ok(Self {
            samples,
            slope,
            intercept,
            r_squared,
            predicted_slope,
        })
    }
}

/// Reference solver used by a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleKind {
    /// Coupled boundary integral system.
    Bie(BieSettings),
    /// Series solution; single sphere only.
    Mie { l_max: usize },
}

/// Far field of the reference solver for `cloud`, with the oracle's own
/// residual (zero for the series).
pub fn oracle_farfield(
    cloud: &ScattererCloud,
    wave: &IncidentWave,
    oracle: &OracleKind,
    directions: &[Vec3],
) -> Result<(FarFieldGrid, f64)> {
    match oracle {
        OracleKind::Bie(settings) => {
            let system = assemble_bie(cloud, wave, settings)?;
            let densities = solve_bie(&system)?;
            let residual = bie::bie_residual(&system, &densities);
            Ok((bie_farfield(&densities, cloud, wave, directions)?, residual))
        }
        OracleKind::Mie { l_max } => {
            if cloud.len() != 1 || !cloud.is_spherical() {
                return Err(Error::InvalidInput("the series oracle needs exactly one sphere".into()));
            }
            let res = mie::mie_reference_at(
                &cloud.centers()[0],
                cloud.radii()[0],
                cloud.impedances()[0],
                wave,
                directions,
                *l_max,
            )?;
            Ok((res.grid, 0.0))
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub regime: RegimeParams,
    pub a_values: Vec<f64>,
    pub variant: CoefficientVariant,
    pub oracle: OracleKind,
    pub wave: IncidentWave,
    pub directions: Vec<Vec3>,
    pub box_side: f64,
    pub jitter: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub a: f64,
    pub m: usize,
    /// Minimum surface distance, `+inf` for one obstacle.
    pub d: f64,
    pub error: f64,
    pub residual_fl: f64,
    pub residual_oracle: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    /// Sorted by decreasing `a`.
    pub rows: Vec<StudyRow>,
    pub fit: RateFit,
}

fn check_a_values(a_values: &[f64]) -> Result<()> {
    if a_values.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: a_values.len(),
        });
    }
    if a_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("a-values must be strictly decreasing".into()));
    }
    Ok(())
}

fn study_row(config: &StudyConfig, a: f64) -> Result<StudyRow> {
    let regime = config.regime.with_a(a);
    let cloud = generate_grid_cloud(&regime, config.box_side, config.jitter, config.seed)?;
    let fl = foldylax::solve_cloud(&cloud, &config.wave, config.variant)?;
    let fl_grid = foldylax::farfield(&fl, &config.directions)?;
    let (oracle_grid, residual_oracle) = oracle_farfield(&cloud, &config.wave, &config.oracle, &config.directions)?;
    Ok(StudyRow {
        a,
        m: cloud.len(),
        d: cloud.min_distance(),
        error: farfield_error(&fl_grid, &oracle_grid)?,
        residual_fl: fl.residual_inf,
        residual_oracle,
    })
}

/// Runs the point-scatterer model and the oracle for each `a` and fits the
/// error decay.
pub fn convergence_study(config: &StudyConfig) -> Result<ConvergenceStudy> {
    check_a_values(&config.a_values)?;
    for &a in &config.a_values {
        let regime = config.regime.with_a(a);
        regime.validate()?;
        if let OracleKind::Bie(settings) = &config.oracle {
            settings.check_feasible(regime.count())?;
        }
    }
    let mut rows = config
        .a_values
        .par_iter()
        .map(|&a| study_row(config, a))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|x, y| y.a.total_cmp(&x.a));
    let samples = rows.iter().map(|r| (r.a, r.error)).collect();
    let fit = RateFit::fit(
        samples,
        predicted_slope(config.regime.s, config.regime.beta, config.variant),
    )?;
    Ok(ConvergenceStudy { rows, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub a: f64,
    pub m: usize,
    pub d: f64,
    pub residual: f64,
    pub report: InvertibilityReport,
    /// `max |Q_m| / a^(2 - beta)`.
    pub charge_ratio: f64,
}

/// Point-scatterer solves on lattice clouds for each `a`, with invertibility
/// diagnostics and charge scaling.
pub fn regime_sweep(
    regime: &RegimeParams,
    a_values: &[f64],
    wave: &IncidentWave,
    variant: CoefficientVariant,
    box_side: f64,
    jitter: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = a_values
        .iter()
        .map(|&a| {
            let regime = regime.with_a(a);
            let cloud = generate_grid_cloud(&regime, box_side, jitter, seed)?;
            let system = foldylax::assemble(&cloud, wave, variant)?;
            let report = foldylax::invertibility_report(&system, &regime)?;
            let solution = foldylax::solve(&system)?;
            Ok(SweepRow {
                a,
                m: cloud.len(),
                d: cloud.min_distance(),
                residual: solution.residual_inf,
                report,
                charge_ratio: foldylax::max_charge(&solution) / a.powf(2.0 - regime.beta),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|x, y| y.a.total_cmp(&x.a));
    Ok(rows)
}

/// Shifts every value of `grid` by `c`; used to build comparison grids.
pub fn shifted(grid: &FarFieldGrid, c: Complex) -> FarFieldGrid {
    FarFieldGrid {
        wave: grid.wave,
        directions: grid.directions.clone(),
        values: grid.values.iter().map(|v| v + c).collect(),
    }
}
