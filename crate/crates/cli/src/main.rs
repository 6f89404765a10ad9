//! Command-line front end: cloud generation, point-scatterer solves, oracle
//! comparisons and parameter sweeps. Files are the only interface between
//! invocations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foldylax_core::analysis::{self, OracleKind, StudyConfig};
use foldylax_core::foldylax::{self, CoefficientVariant};
use foldylax_core::geometry::{cloud_stats, generate_grid_cloud};
use foldylax_core::kernels::DEFAULT_KAPPA_MAX;
use foldylax_core::oracle::{assemble_bie, bie_farfield, solve_bie};
use foldylax_core::special::fibonacci_directions;
use foldylax_core::{io, BieSettings, Complex, Error, IncidentWave, RegimeParams, ScattererCloud};

#[derive(Parser)]
#[command(name = "foldylax", version, about = "Far-field scattering by clouds of small impedance obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a lattice cloud and write it as JSON.
    Generate(GenerateArgs),
    /// Solve the point-scatterer system for a cloud file.
    Solve(SolveArgs),
    /// Compare point-scatterer and reference far fields.
    Compare(CompareArgs),
    /// Run a convergence study or an invertibility sweep over several sizes.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct RegimeArgs {
    /// Maximal obstacle diameter.
    #[arg(long)]
    a: f64,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    beta: f64,
    /// Impedance prefactor as `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    lambda0: Complex,
    #[arg(long = "Mmax", default_value_t = 1.0)]
    m_max: f64,
    #[arg(long, default_value_t = 1.0)]
    dmin: f64,
    #[arg(long, default_value_t = 2.0)]
    dmax: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA_MAX)]
    kappa_max: f64,
    /// Admit the sphere-refined range `beta <= 1`.
    #[arg(long)]
    spherical: bool,
}

impl RegimeArgs {
    fn regime(&self) -> RegimeParams {
        RegimeParams::new(self.a, self.s, self.t, self.beta, self.m_max, self.dmin, self.dmax, self.lambda0)
            .with_kappa_max(self.kappa_max)
            .with_spherical(self.spherical)
    }

    fn echo(&self, out: &mut Vec<(String, String)>) {
        push(out, "a", self.a);
        push(out, "s", self.s);
        push(out, "t", self.t);
        push(out, "beta", self.beta);
        push(out, "lambda0", format!("{},{}", self.lambda0.re, self.lambda0.im));
        push(out, "Mmax", self.m_max);
        push(out, "dmin", self.dmin);
        push(out, "dmax", self.dmax);
        push(out, "kappa_max", self.kappa_max);
        push(out, "spherical", self.spherical);
    }
}

#[derive(Args, Clone)]
struct LatticeArgs {
    #[arg(long, default_value_t = 10.0)]
    box_side: f64,
    /// Relative jitter in `[0, 1)`.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl LatticeArgs {
    fn echo(&self, out: &mut Vec<(String, String)>) {
        push(out, "box_side", self.box_side);
        push(out, "jitter", self.jitter);
        push(out, "seed", self.seed);
    }
}

#[derive(Args, Clone)]
struct WaveArgs {
    #[arg(long)]
    kappa: f64,
    /// Incident direction as `x,y,z`; normalized before use.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,1")]
    theta: [f64; 3],
    #[arg(long, value_enum, default_value_t = VariantArg::General)]
    variant: VariantArg,
    /// Number of far-field directions on a Fibonacci grid.
    #[arg(long, default_value_t = foldylax::DEFAULT_DIRECTIONS)]
    directions: usize,
}

impl WaveArgs {
    fn wave(&self, kappa_max: f64) -> foldylax_core::Result<IncidentWave> {
        IncidentWave::from_direction(self.kappa, self.theta, kappa_max)
    }

    fn echo(&self, out: &mut Vec<(String, String)>) {
        push(out, "kappa", self.kappa);
        push(out, "theta", format!("{},{},{}", self.theta[0], self.theta[1], self.theta[2]));
        push(out, "variant", self.variant.to_core());
        push(out, "directions", self.directions);
    }
}

#[derive(Args, Clone)]
struct OracleArgs {
    #[arg(long, value_enum, default_value_t = OracleArg::Bie)]
    oracle: OracleArg,
    /// Harmonic truncation degree (series length for `mie`).
    #[arg(long = "L", default_value_t = 12)]
    l_max: usize,
    #[arg(long, default_value_t = 24)]
    quad_order: usize,
    /// Largest admissible oracle dimension `M (L+1)^2`.
    #[arg(long, default_value_t = 4000)]
    max_dimension: usize,
}

impl OracleArgs {
    fn settings(&self) -> BieSettings {
        BieSettings {
            l_max: self.l_max,
            quad_order: self.quad_order,
            max_dimension: self.max_dimension,
        }
    }

    fn echo(&self, out: &mut Vec<(String, String)>) {
        push(out, "oracle", format!("{:?}", self.oracle).to_lowercase());
        push(out, "L", self.l_max);
        push(out, "quad_order", self.quad_order);
        push(out, "max_dimension", self.max_dimension);
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    regime: RegimeArgs,
    #[command(flatten)]
    lattice: LatticeArgs,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[command(flatten)]
    wave: WaveArgs,
    /// Report the sufficient invertibility conditions (needs a regime in the cloud file).
    #[arg(long)]
    check_invertibility: bool,
    /// Output directory for `charges.csv` and `farfield.csv`.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[command(flatten)]
    wave: WaveArgs,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Output directory for the far-field tables.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    regime: RegimeArgs,
    /// Obstacle sizes, strictly decreasing for rate studies.
    #[arg(long, value_delimiter = ',', required = true)]
    a_values: Vec<f64>,
    #[command(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    wave: WaveArgs,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long, value_enum, default_value_t = SweepKind::Rate)]
    kind: SweepKind,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    General,
    Spherical,
}

impl VariantArg {
    fn to_core(self) -> CoefficientVariant {
        match self {
            Self::General => CoefficientVariant::General,
            Self::Spherical => CoefficientVariant::Spherical,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleArg {
    Bie,
    Mie,
    Fl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    /// Error decay against the oracle with a log-log fit.
    Rate,
    /// Invertibility diagnostics and charge scaling, no oracle.
    Lemma,
}

fn push(out: &mut Vec<(String, String)>, key: &str, value: impl ToString) {
    out.push((key.to_string(), value.to_string()));
}

fn parse_floats<const N: usize>(text: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {text:?}"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok(out)
}

fn parse_complex(text: &str) -> Result<Complex, String> {
    parse_floats::<2>(text).map(|[re, im]| Complex::new(re, im))
}

fn parse_vec3(text: &str) -> Result<[f64; 3], String> {
    parse_floats::<3>(text)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InfeasibleOracle { .. } => 4,
        Error::SingularSystem { .. }
        | Error::InaccurateSolve { .. }
        | Error::SphericalPole(_)
        | Error::SeriesNotConverged { .. }
        | Error::CoincidentPoints(_) => 3,
        _ => 2,
    }
}

/// Writes through a temporary file in the target directory and renames it.
fn write_atomic(path: &Path, contents: &str) -> foldylax_core::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn read_cloud(path: &Path) -> foldylax_core::Result<ScattererCloud> {
    io::cloud_from_json(&fs::read_to_string(path)?)
}

fn wave_for(cloud: &ScattererCloud, args: &WaveArgs) -> foldylax_core::Result<IncidentWave> {
    args.wave(cloud.regime().map_or(DEFAULT_KAPPA_MAX, |r| r.kappa_max))
}

fn cmd_generate(args: &GenerateArgs) -> foldylax_core::Result<()> {
    let regime = args.regime.regime();
    regime.validate()?;
    let cloud = generate_grid_cloud(&regime, args.lattice.box_side, args.lattice.jitter, args.lattice.seed)?;
    write_atomic(&args.out, &io::cloud_to_json(&cloud))?;
    let stats = cloud_stats(&cloud);
    println!(
        "M = {}, a_eff = {:.6e}, d_eff = {:.6e}, lambda_plus = {:.6e}, lambda_minus = {:.6e}",
        stats.m, stats.a_eff, stats.d_eff, stats.lambda_plus, stats.lambda_minus
    );
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> foldylax_core::Result<()> {
    let cloud = read_cloud(&args.cloud)?;
    let wave = wave_for(&cloud, &args.wave)?;
    if args.check_invertibility && cloud.regime().is_none() {
        return Err(Error::MissingRegime);
    }
    let system = foldylax::assemble(&cloud, &wave, args.wave.variant.to_core())?;
    if args.check_invertibility {
        let report = foldylax::invertibility_report(&system, cloud.regime().expect("checked above"))?;
        println!(
            "invertibility: case {:?}, condition {}, ||Re B_n||_F = {:.6e} (bound {:.6e}), threshold {:.6e}",
            report.applicable_case,
            if report.condition_applicable { "holds" } else { "fails" },
            report.frobenius_offdiag_real,
            report.frobenius_bound,
            report.bound_rhs
        );
    }
    let solution = foldylax::solve(&system)?;
    let grid = foldylax::farfield(&solution, &fibonacci_directions(args.wave.directions))?;

    let mut config = Vec::new();
    push(&mut config, "cloud", args.cloud.display());
    args.wave.echo(&mut config);
    write_atomic(&args.out.join("charges.csv"), &io::charges_csv(&solution, &config))?;
    write_atomic(&args.out.join("farfield.csv"), &io::farfield_csv(&grid, &config))?;
    println!(
        "M = {}, residual = {:.3e}, max |Q| = {:.6e}",
        solution.charges.len(),
        solution.residual_inf,
        foldylax::max_charge(&solution)
    );
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> foldylax_core::Result<()> {
    let cloud = read_cloud(&args.cloud)?;
    let wave = wave_for(&cloud, &args.wave)?;
    let dirs = fibonacci_directions(args.wave.directions);
    let solution = foldylax::solve_cloud(&cloud, &wave, args.wave.variant.to_core())?;
    let fl = foldylax::farfield(&solution, &dirs)?;

    let mut config = Vec::new();
    push(&mut config, "cloud", args.cloud.display());
    args.wave.echo(&mut config);
    args.oracle.echo(&mut config);

    let reference = match args.oracle.oracle {
        OracleArg::Fl => fl.clone(),
        OracleArg::Mie => analysis::oracle_farfield(&cloud, &wave, &OracleKind::Mie { l_max: args.oracle.l_max }, &dirs)?.0,
        OracleArg::Bie => {
            let system = assemble_bie(&cloud, &wave, &args.oracle.settings())?;
            let densities = solve_bie(&system)?;
            write_atomic(&args.out.join("density.csv"), &io::density_csv(&densities, &config))?;
            bie_farfield(&densities, &cloud, &wave, &dirs)?
        }
    };
    let error = analysis::farfield_error_detail(&fl, &reference)?;
    write_atomic(&args.out.join("fl_farfield.csv"), &io::farfield_csv(&fl, &config))?;
    write_atomic(&args.out.join("oracle_farfield.csv"), &io::farfield_csv(&reference, &config))?;
    println!(
        "sup error = {:.6e} at direction [{:.6}, {:.6}, {:.6}]",
        error.sup, error.direction[0], error.direction[1], error.direction[2]
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> foldylax_core::Result<()> {
    let variant = args.wave.variant.to_core();
    let regime = args.regime.regime();
    let wave = args.wave.wave(regime.kappa_max)?;
    let mut config = Vec::new();
    args.regime.echo(&mut config);
    push(
        &mut config,
        "a_values",
        args.a_values.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    );
    args.lattice.echo(&mut config);
    args.wave.echo(&mut config);
    push(&mut config, "kind", format!("{:?}", args.kind).to_lowercase());

    match args.kind {
        SweepKind::Lemma => {
            let rows = analysis::regime_sweep(
                &regime,
                &args.a_values,
                &wave,
                variant,
                args.lattice.box_side,
                args.lattice.jitter,
                args.lattice.seed,
            )?;
            write_atomic(&args.out, &io::sweep_csv(&rows, &config))?;
            for r in &rows {
                println!(
                    "a = {:.4e}, M = {}, condition {}, max|Q|/a^(2-beta) = {:.4e}",
                    r.a,
                    r.m,
                    if r.report.condition_applicable { "holds" } else { "fails" },
                    r.charge_ratio
                );
            }
        }
        SweepKind::Rate => {
            args.oracle.echo(&mut config);
            let oracle = match args.oracle.oracle {
                OracleArg::Bie => OracleKind::Bie(args.oracle.settings()),
                OracleArg::Mie => OracleKind::Mie { l_max: args.oracle.l_max },
                OracleArg::Fl => {
                    return Err(Error::InvalidInput(
                        "a rate study needs an independent oracle (bie or mie)".into(),
                    ))
                }
            };
            let study = analysis::convergence_study(&StudyConfig {
                regime,
                a_values: args.a_values.clone(),
                variant,
                oracle,
                wave,
                directions: fibonacci_directions(args.wave.directions),
                box_side: args.lattice.box_side,
                jitter: args.lattice.jitter,
                seed: args.lattice.seed,
            })?;
            write_atomic(&args.out, &io::study_csv(&study, &config))?;
            println!(
                "slope = {:.4} (predicted {:.4}), r2 = {:.4}",
                study.fit.slope, study.fit.predicted_slope, study.fit.r_squared
            );
        }
    }
    Ok(())
}

fn configure_threads() {
    if let Ok(value) = std::env::var("FOLDYLAX_THREADS") {
        match value.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => log::warn!("ignoring FOLDYLAX_THREADS={value:?}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_number_lists() {
        assert_eq!(parse_complex("-1,0.5").unwrap(), Complex::new(-1.0, 0.5));
        assert_eq!(parse_vec3(" 0, 0 ,1").unwrap(), [0.0, 0.0, 1.0]);
        assert!(parse_vec3("0,1").is_err());
        assert!(parse_complex("x,1").is_err());
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(exit_code(&Error::RegimeViolation("s/3 <= t fails".into())), 2);
        assert_eq!(
            exit_code(&Error::SingularSystem {
                column: 0,
                pivot: 0.0,
                threshold: 1e-14
            }),
            3
        );
        assert_eq!(exit_code(&Error::InfeasibleOracle { dimension: 10, cap: 5 }), 4);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
