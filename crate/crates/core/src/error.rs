use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("capacity exceeded: {needed} scatterers need a box side of {required:.6}, got {available:.6}")]
    CapacityExceeded {
        needed: usize,
        required: f64,
        available: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coincident points: |x - y| = {0:e}")]
    CoincidentPoints(f64),

    #[error("coincident centers: scatterers {0} and {1}")]
    CoincidentCenters(usize, usize),

    #[error("direction is not a unit vector: |xhat| = {0}")]
    NonUnitDirection(f64),

    #[error("zero impedance: every scattering coefficient vanishes")]
    ZeroImpedance,

    #[error("spherical coefficient pole: |-1 + lambda r| = {0:e}")]
    SphericalPole(f64),

    #[error("singular system: pivot {pivot:e} at column {column} below {threshold:e}")]
    SingularSystem {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("solve residual {residual:e} exceeds {limit:e}")]
    InaccurateSolve { residual: f64, limit: f64 },

    #[error("cloud carries no regime parameters")]
    MissingRegime,

    #[error("interior resonance guard: kappa * diameter = {value} must stay below {limit}")]
    ResonanceGuard { value: f64, limit: f64 },

    #[error("spheres {0} and {1} overlap or touch")]
    OverlappingSpheres(usize, usize),

    #[error("series not converged: last term {last:e} exceeds 1e-12 of partial sum {sum:e}")]
    SeriesNotConverged { last: f64, sum: f64 },

    #[error("far-field grids differ: {0}")]
    GridMismatch(String),

    #[error("oracle infeasible: system dimension {dimension} exceeds cap {cap}")]
    InfeasibleOracle { dimension: usize, cap: usize },

    #[error("rate fit needs at least {needed} usable samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
