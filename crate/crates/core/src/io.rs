//! Text formats: cloud files (JSON) and result tables (CSV).
//!
//! Every float is written with 17 significant digits so that files round-trip
//! exactly and repeated runs produce identical bytes.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::analysis::{ConvergenceStudy, SweepRow};
use crate::error::{Error, Result};
use crate::foldylax::{FarFieldGrid, FoldyLaxSolution};
use crate::geometry::{RegimeParams, ScattererCloud};
use crate::oracle::SurfaceDensity;
use crate::special::harmonic_degree_order;
use crate::Complex;

pub const CLOUD_FORMAT_VERSION: u32 = 1;
/// Stamped into every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round-trip float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_array(values: impl IntoIterator<Item = f64>) -> String {
    let items: Vec<String> = values.into_iter().map(fmt_f64).collect();
    format!("[{}]", items.join(", "))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegimeFile {
    a: f64,
    s: f64,
    t: f64,
    beta: f64,
    m_max: f64,
    d_min: f64,
    d_max: f64,
    lambda0_re: f64,
    lambda0_im: f64,
    kappa_max: f64,
    spherical: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CloudFile {
    version: u32,
    centers: Vec<[f64; 3]>,
    radii: Vec<f64>,
    #[serde(default)]
    areas: Option<Vec<f64>>,
    impedance_re: Vec<f64>,
    impedance_im: Vec<f64>,
    regime: Option<RegimeFile>,
}

pub fn cloud_to_json(cloud: &ScattererCloud) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"version\": {CLOUD_FORMAT_VERSION},");
    let centers: Vec<String> = cloud.centers().iter().map(|c| json_array(c.iter().copied())).collect();
    let _ = writeln!(out, "  \"centers\": [\n    {}\n  ],", centers.join(",\n    "));
    let _ = writeln!(out, "  \"radii\": {},", json_array(cloud.radii().iter().copied()));
    if let Some(areas) = cloud.areas() {
        let _ = writeln!(out, "  \"areas\": {},", json_array(areas.iter().copied()));
    }
    let _ = writeln!(out, "  \"impedance_re\": {},", json_array(cloud.impedances().iter().map(|l| l.re)));
    let _ = writeln!(out, "  \"impedance_im\": {},", json_array(cloud.impedances().iter().map(|l| l.im)));
    match cloud.regime() {
        None => out.push_str("  \"regime\": null\n"),
        Some(r) => {
            out.push_str("  \"regime\": {\n");
            for (key, value) in [
                ("a", r.a),
                ("s", r.s),
                ("t", r.t),
                ("beta", r.beta),
                ("m_max", r.m_max),
                ("d_min", r.d_min),
                ("d_max", r.d_max),
                ("lambda0_re", r.lambda0.re),
                ("lambda0_im", r.lambda0.im),
                ("kappa_max", r.kappa_max),
            ] {
                let _ = writeln!(out, "    \"{key}\": {},", fmt_f64(value));
            }
            let _ = writeln!(out, "    \"spherical\": {}", r.spherical);
            out.push_str("  }\n");
        }
    }
    out.push_str("}\n");
    out
}

pub fn cloud_from_json(text: &str) -> Result<ScattererCloud> {
    let file: CloudFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.version != CLOUD_FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported cloud format version {}", file.version)));
    }
    if file.impedance_re.len() != file.impedance_im.len() {
        return Err(Error::Parse("impedance_re and impedance_im differ in length".into()));
    }
    let impedances = file
        .impedance_re
        .iter()
        .zip(&file.impedance_im)
        .map(|(re, im)| Complex::new(*re, *im))
        .collect();
    let regime = file.regime.map(|r| {
        let params = RegimeParams::new(
            r.a,
            r.s,
            r.t,
            r.beta,
            r.m_max,
            r.d_min,
            r.d_max,
            Complex::new(r.lambda0_re, r.lambda0_im),
        )
        .with_kappa_max(r.kappa_max)
        .with_spherical(r.spherical);
        params.validate().map(|_| params)
    });
    let regime = regime.transpose()?;
    match file.areas {
        None => ScattererCloud::spheres(file.centers, file.radii, impedances, regime),
        Some(areas) => ScattererCloud::general(file.centers, file.radii, areas, impedances, regime),
    }
}

/// CSV preamble: version stamp and one `# config:` line per entry.
pub fn csv_header(config: &[(String, String)]) -> String {
    let mut out = format!("# foldylax {VERSION}\n");
    for (key, value) in config {
        let _ = writeln!(out, "# config: {key}={value}");
    }
    out
}

pub fn charges_csv(solution: &FoldyLaxSolution, config: &[(String, String)]) -> String {
    let mut out = csv_header(config);
    out.push_str("m,re_Q,im_Q\n");
    for (m, q) in solution.charges.iter().enumerate() {
        let _ = writeln!(out, "{m},{},{}", fmt_f64(q.re), fmt_f64(q.im));
    }
    out
}

pub fn farfield_csv(grid: &FarFieldGrid, config: &[(String, String)]) -> String {
    let mut out = csv_header(config);
    out.push_str("xhat_x,xhat_y,xhat_z,re_U,im_U\n");
    for (x, u) in grid.directions.iter().zip(&grid.values) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(x[0]),
            fmt_f64(x[1]),
            fmt_f64(x[2]),
            fmt_f64(u.re),
            fmt_f64(u.im)
        );
    }
    out
}

pub fn density_csv(densities: &[SurfaceDensity], config: &[(String, String)]) -> String {
    let mut out = csv_header(config);
    out.push_str("sphere,l,m,re,im\n");
    for d in densities {
        for (k, c) in d.coeffs.iter().enumerate() {
            let (l, m) = harmonic_degree_order(k);
            let _ = writeln!(out, "{},{l},{m},{},{}", d.sphere_index, fmt_f64(c.re), fmt_f64(c.im));
        }
    }
    out
}

pub fn study_csv(study: &ConvergenceStudy, config: &[(String, String)]) -> String {
    let mut out = csv_header(config);
    out.push_str("a,M,d,error,residual_fl,residual_bie\n");
    for r in &study.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.a),
            r.m,
            fmt_f64(r.d),
            fmt_f64(r.error),
            fmt_f64(r.residual_fl),
            fmt_f64(r.residual_oracle)
        );
    }
    let f = &study.fit;
    out.push_str("slope,intercept,r2,predicted\n");
    let _ = writeln!(
        out,
        "{},{},{},{}",
        fmt_f64(f.slope),
        fmt_f64(f.intercept),
        fmt_f64(f.r_squared),
        fmt_f64(f.predicted_slope)
    );
    out
}

pub fn sweep_csv(rows: &[SweepRow], config: &[(String, String)]) -> String {
    let mut out = csv_header(config);
    out.push_str("a,M,d,residual,frobenius,frobenius_bound,bound_rhs,condition,charge_ratio\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.a),
            r.m,
            fmt_f64(r.d),
            fmt_f64(r.residual),
            fmt_f64(r.report.frobenius_offdiag_real),
            fmt_f64(r.report.frobenius_bound),
            fmt_f64(r.report.bound_rhs),
            r.report.condition_applicable,
            fmt_f64(r.charge_ratio)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_grid_cloud;

    fn regime() -> RegimeParams {
        RegimeParams::new(0.1, 1.0, 0.34, 0.5, 1.0, 1.0, 2.0, Complex::new(-1.0, 0.25)).with_kappa_max(1.0)
    }

    #[test]
    fn cloud_round_trips_exactly() {
        let cloud = generate_grid_cloud(&regime(), 100.0, 0.3, 7).unwrap();
        let text = cloud_to_json(&cloud);
        let back = cloud_from_json(&text).unwrap();
        assert_eq!(back, cloud);
        assert_eq!(cloud_to_json(&back), text);
    }

    #[test]
    fn general_cloud_without_regime_round_trips() {
        let cloud = ScattererCloud::general(
            vec![[0.0, 0.0, 0.0], [1.0, 0.1, -0.3]],
            vec![0.1, 0.2],
            vec![0.05, 0.3],
            vec![Complex::new(-1.0, 0.0), Complex::new(2.0, -0.5)],
            None,
        )
        .unwrap();
        assert_eq!(cloud_from_json(&cloud_to_json(&cloud)).unwrap(), cloud);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cloud = generate_grid_cloud(&regime(), 100.0, 0.0, 7).unwrap();
        let text = cloud_to_json(&cloud).replacen("\"version\"", "\"colour\": 1, \"version\"", 1);
        assert!(matches!(cloud_from_json(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn invalid_regime_in_file_is_rejected() {
        let cloud = generate_grid_cloud(&regime(), 100.0, 0.0, 7).unwrap();
        let text = cloud_to_json(&cloud).replace("\"t\": 3.4000000000000002e-1", "\"t\": 1.0000000000000000e-1");
        assert!(matches!(cloud_from_json(&text), Err(Error::RegimeViolation(_))));
    }

    #[test]
    fn header_echoes_config() {
        let h = csv_header(&[("a".into(), "0.1".into()), ("seed".into(), "7".into())]);
        assert!(h.starts_with("# foldylax "));
        assert!(h.contains("# config: a=0.1\n# config: seed=7\n"));
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
