//! Scatterer configurations and the scaling regime that generates them.
//!
//! A regime fixes how the number of obstacles, their minimum separation and
//! their surface impedance scale with the maximal diameter `a`:
//! `M <= M_max a^-s`, `d_min a^t <= d <= d_max a^t`, `lambda = lambda0 a^-beta`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::DEFAULT_KAPPA_MAX;
use crate::{vec3, Complex, Vec3};

/// Relative slack for comparisons against the regime's prefactor bounds.
const REGIME_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    /// Maximal obstacle diameter.
    pub a: f64,
    /// Number exponent: `M <= m_max a^-s`.
    pub s: f64,
    /// Distance exponent: `d ~ a^t`.
    pub t: f64,
    /// Impedance exponent: `lambda = lambda0 a^-beta`.
    pub beta: f64,
    pub m_max: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub lambda0: Complex,
    pub kappa_max: f64,
    /// Targets the sphere-refined coefficient, which also admits `beta = 1`.
    pub spherical: bool,
}

impl RegimeParams {
    /// Regime with `kappa_max = 2 pi` and the general (non-spherical) admissibility rule.
    #[allow(clippy::too_many_arguments)]
    pub fn new(a: f64, s: f64, t: f64, beta: f64, m_max: f64, d_min: f64, d_max: f64, lambda0: Complex) -> Self {
        Self {
            a,
            s,
            t,
            beta,
            m_max,
            d_min,
            d_max,
            lambda0,
            kappa_max: DEFAULT_KAPPA_MAX,
            spherical: false,
        }
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_kappa_max(mut self, kappa_max: f64) -> Self {
        self.kappa_max = kappa_max;
        self
    }

    pub fn with_spherical(mut self, spherical: bool) -> Self {
        self.spherical = spherical;
        self
    }

    /// Checks positivity of the prefactors and the admissibility conditions
    /// `beta < 1` (`<= 1` for spheres), `s <= 2 - beta`, `s/3 <= t`, `a kappa_max < 1`.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.s, self.t, self.beta, self.m_max, self.d_min, self.d_max, self.kappa_max]
            .iter()
            .all(|v| v.is_finite())
            && self.lambda0.re.is_finite()
            && self.lambda0.im.is_finite();
        if !finite {
            return Err(Error::RegimeViolation("non-finite regime parameter".into()));
        }
        if self.a <= 0.0 {
            return Err(Error::RegimeViolation(format!("a = {} must be positive", self.a)));
        }
        if self.s < 0.0 || self.t < 0.0 || self.beta < 0.0 {
            return Err(Error::RegimeViolation("exponents s, t, beta must be non-negative".into()));
        }
        if self.m_max <= 0.0 || self.d_min <= 0.0 || self.kappa_max <= 0.0 {
            return Err(Error::RegimeViolation("prefactors M_max, d_min, kappa_max must be positive".into()));
        }
        if self.d_max < self.d_min {
            return Err(Error::RegimeViolation(format!(
                "d_max = {} is below d_min = {}",
                self.d_max, self.d_min
            )));
        }
        if self.lambda0.norm() == 0.0 {
            return Err(Error::RegimeViolation("impedance prefactor lambda0 must be nonzero".into()));
        }
        if self.spherical {
            if self.beta > 1.0 {
                return Err(Error::RegimeViolation(format!(
                    "beta <= 1 fails (beta = {}) for spherical obstacles",
                    self.beta
                )));
            }
        } else if self.beta >= 1.0 {
            return Err(Error::RegimeViolation(format!("beta < 1 fails (beta = {})", self.beta)));
        }
        if self.s > 2.0 - self.beta {
            return Err(Error::RegimeViolation(format!(
                "s <= 2 - beta fails (s = {}, beta = {})",
                self.s, self.beta
            )));
        }
        if self.s / 3.0 > self.t {
            return Err(Error::RegimeViolation(format!(
                "s/3 <= t fails (s = {}, t = {})",
                self.s, self.t
            )));
        }
        if self.a * self.kappa_max >= 1.0 {
            return Err(Error::RegimeViolation(format!(
                "a * kappa_max < 1 fails (a = {}, kappa_max = {})",
                self.a, self.kappa_max
            )));
        }
        Ok(())
    }

    /// `floor(M_max a^-s)`, at least one.
    pub fn count(&self) -> usize {
        let m = self.m_max * self.a.powf(-self.s);
        ((m * (1.0 + REGIME_SLACK)).floor() as usize).max(1)
    }

    /// Lower target for the minimum separation, `d_min a^t`.
    pub fn d_low(&self) -> f64 {
        self.d_min * self.a.powf(self.t)
    }

    pub fn d_high(&self) -> f64 {
        self.d_max * self.a.powf(self.t)
    }

    /// `lambda0 a^-beta`.
    pub fn impedance(&self) -> Complex {
        self.lambda0 * self.a.powf(-self.beta)
    }
}

/// Obstacles with centers, bounding radii and impedances.
///
/// Spheres carry their radius; general shapes additionally carry their
/// surface area, with the radius acting as a bounding radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererCloud {
    centers: Vec<Vec3>,
    radii: Vec<f64>,
    areas: Option<Vec<f64>>,
    impedances: Vec<Complex>,
    regime: Option<RegimeParams>,
    min_distance: f64,
}

impl ScattererCloud {
    /// Spherical obstacles.
    pub fn spheres(
        centers: Vec<Vec3>,
        radii: Vec<f64>,
        impedances: Vec<Complex>,
        regime: Option<RegimeParams>,
    ) -> Result<Self> {
        Self::build(centers, radii, None, impedances, regime)
    }

    /// General obstacles described by a bounding radius and a surface area.
    pub fn general(
        centers: Vec<Vec3>,
        bounding_radii: Vec<f64>,
        areas: Vec<f64>,
        impedances: Vec<Complex>,
        regime: Option<RegimeParams>,
    ) -> Result<Self> {
        Self::build(centers, bounding_radii, Some(areas), impedances, regime)
    }

    pub(crate) fn build(
        centers: Vec<Vec3>,
        radii: Vec<f64>,
        areas: Option<Vec<f64>>,
        impedances: Vec<Complex>,
        regime: Option<RegimeParams>,
    ) -> Result<Self> {
        let m = centers.len();
        if m == 0 {
            return Err(Error::InvalidInput("a cloud needs at least one scatterer".into()));
        }
        if radii.len() != m || impedances.len() != m || areas.as_ref().is_some_and(|a| a.len() != m) {
            return Err(Error::InvalidInput("centers, radii, areas and impedances differ in length".into()));
        }
        if centers.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite center coordinate".into()));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidInput("radii must be positive and finite".into()));
        }
        if let Some(areas) = &areas {
            if areas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(Error::InvalidInput("surface areas must be positive and finite".into()));
            }
        }
        if impedances.iter().any(|l| !(l.re.is_finite() && l.im.is_finite())) {
            return Err(Error::InvalidInput("non-finite impedance".into()));
        }
        let min_distance = min_surface_distance(&centers, &radii)?;
        let cloud = Self {
            centers,
            radii,
            areas,
            impedances,
            regime,
            min_distance,
        };
        if let Some(regime) = &cloud.regime {
            cloud.check_regime(regime)?;
        }
        Ok(cloud)
    }

    fn check_regime(&self, regime: &RegimeParams) -> Result<()> {
        let m = self.len() as f64;
        let m_cap = regime.m_max * regime.a.powf(-regime.s);
        if m > m_cap * (1.0 + REGIME_SLACK) {
            return Err(Error::RegimeViolation(format!("M = {m} exceeds M_max a^-s = {m_cap}")));
        }
        let a_eff = 2.0 * self.max_radius();
        if a_eff > regime.a * (1.0 + REGIME_SLACK) {
            return Err(Error::RegimeViolation(format!("2 max r = {a_eff} exceeds a = {}", regime.a)));
        }
        if self.len() > 1 {
            let (lo, hi) = (regime.d_low(), regime.d_high());
            let d = self.min_distance;
            if d < lo * (1.0 - REGIME_SLACK) || d > hi * (1.0 + REGIME_SLACK) {
                return Err(Error::RegimeViolation(format!(
                    "minimum distance {d} outside [d_min a^t, d_max a^t] = [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn areas(&self) -> Option<&[f64]> {
        self.areas.as_deref()
    }

    pub fn impedances(&self) -> &[Complex] {
        &self.impedances
    }

    pub fn regime(&self) -> Option<&RegimeParams> {
        self.regime.as_ref()
    }

    pub fn is_spherical(&self) -> bool {
        self.areas.is_none()
    }

    /// `|dD_m|`: `4 pi r^2` for spheres, the stored area otherwise.
    pub fn surface_area(&self, m: usize) -> f64 {
        match &self.areas {
            Some(a) => a[m],
            None => 4.0 * std::f64::consts::PI * self.radii[m] * self.radii[m],
        }
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// Minimum pairwise surface distance; `+inf` for a single obstacle.
    pub fn min_distance(&self) -> f64 {
        self.min_distance
    }

    /// Rigid translation by `v`, keeping radii, impedances and regime.
    pub fn translated(&self, v: &Vec3) -> Result<Self> {
        let centers = self.centers.iter().map(|z| vec3::add(z, v)).collect();
        Self::build(centers, self.radii.clone(), self.areas.clone(), self.impedances.clone(), self.regime)
    }

    /// Same geometry with new impedances.
    pub fn with_impedances(&self, impedances: Vec<Complex>) -> Result<Self> {
        Self::build(self.centers.clone(), self.radii.clone(), self.areas.clone(), impedances, self.regime)
    }

    /// Same geometry and impedances without regime provenance.
    pub fn without_regime(&self) -> Self {
        Self {
            regime: None,
            ..self.clone()
        }
    }
}

fn min_surface_distance(centers: &[Vec3], radii: &[f64]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let r = vec3::dist(&centers[i], &centers[j]);
            if r == 0.0 {
                return Err(Error::CoincidentCenters(i, j));
            }
            let gap = r - radii[i] - radii[j];
            if gap <= 0.0 {
                return Err(Error::OverlappingSpheres(i, j));
            }
            best = best.min(gap);
        }
    }
    Ok(best)
}

/// Aggregate quantities recovered from a cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudStats {
    pub m: usize,
    /// `2 max r_m`.
    pub a_eff: f64,
    /// Minimum surface distance, `+inf` for one obstacle.
    pub d_eff: f64,
    /// `max |lambda_{m,0}|`.
    pub lambda_plus: f64,
    /// `min |Re lambda_{m,0}|`.
    pub lambda_minus: f64,
}

/// Summary statistics; impedance prefactors are `lambda_m a^beta` (or
/// `lambda_m` itself when the cloud has no regime).
pub fn cloud_stats(cloud: &ScattererCloud) -> CloudStats {
    let rescale = cloud.regime.map_or(1.0, |r| r.a.powf(r.beta));
    let pre: Vec<Complex> = cloud.impedances.iter().map(|l| l * rescale).collect();
    CloudStats {
        m: cloud.len(),
        a_eff: 2.0 * cloud.max_radius(),
        d_eff: cloud.min_distance,
        lambda_plus: pre.iter().map(|l| l.norm()).fold(0.0, f64::max),
        lambda_minus: pre.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min),
    }
}

/// Lattice cloud realizing `regime`.
///
/// `M = floor(M_max a^-s)` spheres of radius `a/2` fill a cubic lattice
/// centered at the origin in lexicographic order. Without jitter the pitch is
/// `a + d_min a^t`. With jitter each center moves by at most
/// `jitter * d_min a^t / 2` and the pitch grows by twice that amount, so the
/// minimum separation never drops below `d_min a^t`.
pub fn generate_grid_cloud(regime: &RegimeParams, box_side: f64, jitter: f64, seed: u64) -> Result<ScattererCloud> {
    regime.validate()?;
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::InvalidInput(format!("jitter must lie in [0, 1), got {jitter}")));
    }
    let m = regime.count();
    let d = regime.d_low();
    let shift = jitter * d / 2.0;
    let pitch = regime.a + d + 2.0 * shift;
    let side = cube_side(m);
    let required = (side as f64 - 1.0) * pitch + regime.a + 2.0 * shift;
    if !(box_side >= required) {
        return Err(Error::CapacityExceeded {
            needed: m,
            required,
            available: box_side,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = (side as f64 - 1.0) / 2.0;
    let mut centers = Vec::with_capacity(m);
    'fill: for i in 0..side {
        for j in 0..side {
            for k in 0..side {
                if centers.len() == m {
                    break 'fill;
                }
                let mut z = [
                    (i as f64 - offset) * pitch,
                    (j as f64 - offset) * pitch,
                    (k as f64 - offset) * pitch,
                ];
                if shift > 0.0 {
                    let u = random_in_ball(&mut rng);
                    z = vec3::add(&z, &vec3::scale(&u, shift));
                }
                centers.push(z);
            }
        }
    }
    let radii = vec![regime.a / 2.0; m];
    let impedances = vec![regime.impedance(); m];
    ScattererCloud::spheres(centers, radii, impedances, Some(*regime))
}

fn cube_side(m: usize) -> usize {
    let mut side = 1;
    while side * side * side < m {
        side += 1;
    }
    side
}

fn random_in_ball(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if vec3::dot(&v, &v) <= 1.0 {
            return v;
        }
    }
}

/// Obstacles in the `n`-th cubic shell around a lattice site:
/// `(2n+1)^3 - (2n-1)^3`.
pub fn layer_count(n: u64) -> u64 {
    assert!(n >= 1, "layer index starts at 1");
    (2 * n + 1).pow(3) - (2 * n - 1).pow(3)
}

/// Obstacles in shells `1..=n`: `(2n+1)^3 - 1`.
pub fn cumulative_layer_count(n: u64) -> u64 {
    (2 * n + 1).pow(3) - 1
}
