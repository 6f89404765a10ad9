//! Spherical Bessel functions, spherical harmonics and sphere quadrature.

use std::f64::consts::PI;

use crate::Complex;

/// `j_l(x)` for `l = 0..=lmax`, `x > 0`.
pub fn spherical_j(lmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "spherical_j needs x > 0");
    if x <= 1.0 {
        return (0..=lmax).map(|l| spherical_j_series(l, x)).collect();
    }
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    if x > lmax as f64 {
        let mut out = Vec::with_capacity(lmax + 1);
        out.push(j0);
        if lmax >= 1 {
            out.push(j1);
        }
        for l in 1..lmax {
            let next = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
            out.push(next);
        }
        return out;
    }
    // Miller's downward recurrence, normalized on whichever of j0, j1 is larger.
    let start = lmax + 20 + x.ceil() as usize;
    let mut vals = vec![0.0; start + 2];
    vals[start + 1] = 0.0;
    vals[start] = 1e-300;
    for l in (1..=start).rev() {
        vals[l - 1] = (2 * l + 1) as f64 / x * vals[l] - vals[l + 1];
        if vals[l - 1].abs() > 1e250 {
            for v in vals[l - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let scale = if j0.abs() >= j1.abs() {
        j0 / vals[0]
    } else {
        j1 / vals[1]
    };
    vals.truncate(lmax + 1);
    vals.iter_mut().for_each(|v| *v *= scale);
    vals
}

fn spherical_j_series(l: usize, x: f64) -> f64 {
    let mut lead = 1.0;
    for k in 0..l {
        lead *= x / (2 * k + 3) as f64;
    }
    // lead = x^l / (2l+1)!!
    let mut term = 1.0;
    let mut sum = 1.0;
    let y = -0.5 * x * x;
    for k in 1..60 {
        term *= y / (k as f64 * (2 * l + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// `y_l(x)` for `l = 0..=lmax`, `x > 0` (upward recurrence).
pub fn spherical_y(lmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "spherical_y needs x > 0");
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(-x.cos() / x);
    if lmax >= 1 {
        out.push(-x.cos() / (x * x) - x.sin() / x);
    }
    for l in 1..lmax {
        let next = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        out.push(next);
    }
    out
}

/// Derivatives `f_l'(x)` from values `f_0..=f_{lmax+1}` of any spherical Bessel family.
///
/// Uses `f_l' = f_{l-1} - (l+1)/x f_l` and `f_0' = -f_1`.
pub fn derivatives(vals: &[f64], x: f64, lmax: usize) -> Vec<f64> {
    assert!(vals.len() >= lmax + 2);
    (0..=lmax)
        .map(|l| {
            if l == 0 {
                -vals[1]
            } else {
                vals[l - 1] - (l + 1) as f64 / x * vals[l]
            }
        })
        .collect()
}

/// Values and derivatives of `j_l`, `y_l` for `l = 0..=lmax`.
#[derive(Debug, Clone)]
pub struct BesselTable {
    pub j: Vec<f64>,
    pub dj: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

impl BesselTable {
    pub fn new(lmax: usize, x: f64) -> Self {
        let j = spherical_j(lmax + 1, x);
        let y = spherical_y(lmax + 1, x);
        let dj = derivatives(&j, x, lmax);
        let dy = derivatives(&y, x, lmax);
        Self {
            j: j[..=lmax].to_vec(),
            dj,
            y: y[..=lmax].to_vec(),
            dy,
        }
    }

    /// `h_l^{(1)} = j_l + i y_l`.
    pub fn h(&self, l: usize) -> Complex {
        Complex::new(self.j[l], self.y[l])
    }

    pub fn dh(&self, l: usize) -> Complex {
        Complex::new(self.dj[l], self.dy[l])
    }
}

/// Legendre polynomials `P_0..=P_lmax` at `t`.
pub fn legendre(lmax: usize, t: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(lmax + 1);
    p.push(1.0);
    if lmax >= 1 {
        p.push(t);
    }
    for l in 1..lmax {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * t * p[l] - lf * p[l - 1]) / (lf + 1.0);
        p.push(next);
    }
    p
}

/// Flat index of `(l, m)` in a degree-ordered harmonic vector.
#[inline]
pub fn harmonic_index(l: usize, m: i64) -> usize {
    l * l + (l as i64 + m) as usize
}

/// Number of harmonics up to degree `lmax`.
#[inline]
pub fn harmonic_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

/// Inverse of [`harmonic_index`].
pub fn harmonic_degree_order(index: usize) -> (usize, i64) {
    let l = (index as f64).sqrt().floor() as usize;
    let l = if (l + 1) * (l + 1) <= index { l + 1 } else { l };
    (l, index as i64 - (l * l) as i64 - l as i64)
}

/// Orthonormal complex spherical harmonics `Y_l^m(polar, azimuth)` with the
/// Condon-Shortley phase, all `l <= lmax`, ordered by [`harmonic_index`].
pub fn spherical_harmonics(lmax: usize, cos_theta: f64, phi: f64) -> Vec<Complex> {
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let n = lmax + 1;
    // pbar[l][m], m >= 0, normalized so that Y_l^m = pbar * exp(i m phi).
    let mut pbar = vec![0.0; n * n];
    let at = |l: usize, m: usize| l * n + m;
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_theta;
        }
        pbar[at(m, m)] = pmm;
        if m < lmax {
            pbar[at(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * cos_theta * pmm;
        }
        for l in m + 2..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            pbar[at(l, m)] = a * (cos_theta * pbar[at(l - 1, m)] - b * pbar[at(l - 2, m)]);
        }
    }
    let mut out = vec![Complex::new(0.0, 0.0); harmonic_count(lmax)];
    for l in 0..=lmax {
        for m in 0..=l {
            let v = Complex::from_polar(pbar[at(l, m)], m as f64 * phi);
            out[harmonic_index(l, m as i64)] = v;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[harmonic_index(l, -(m as i64))] = v.conj() * sign;
            }
        }
    }
    out
}

/// Harmonics evaluated at a unit vector.
pub fn spherical_harmonics_at(lmax: usize, dir: &[f64; 3]) -> Vec<Complex> {
    let phi = dir[1].atan2(dir[0]);
    spherical_harmonics(lmax, dir[2].clamp(-1.0, 1.0), phi)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x = 0.0;
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    (nodes, weights)
}

/// Product rule on the unit sphere: Gauss-Legendre in `cos(polar)` times the
/// uniform rule in azimuth with `2 n` points.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(order: usize) -> Self {
        let (t, w) = gauss_legendre(order);
        let n_phi = 2 * order;
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(order * n_phi);
        let mut weights = Vec::with_capacity(order * n_phi);
        for (ct, wt) in t.iter().zip(&w) {
            let st = (1.0 - ct * ct).sqrt();
            for k in 0..n_phi {
                let phi = (k as f64 + 0.5) * dphi;
                points.push([st * phi.cos(), st * phi.sin(), *ct]);
                weights.push(wt * dphi);
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Quasi-uniform Fibonacci lattice of `n` unit directions.
pub fn fibonacci_directions(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let v = [r * phi.cos(), r * phi.sin(), z];
            let s = 1.0 / (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] * s, v[1] * s, v[2] * s]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from scipy.special.spherical_jn / spherical_yn.
    const BESSEL: &[(usize, f64, f64, f64, f64, f64)] = &[
        (0, 0.5, 0.958851077208406, -1.7551651237807455, -0.1625370306360667, 4.469181324769897),
        (1, 0.5, 0.1625370306360667, -4.469181324769897, 0.3087029546641392, 16.121560175298843),
        (5, 0.01, 9.619972620034282e-15, -945005250018749.6, 4.8099789100344535e-12, 5.6700210000374976e+17),
        (12, 0.3, 6.710925600444038e-20, -1.9873860292911946e+18, 2.6836244960512567e-18, 8.609413401055956e+19),
        (3, 2.0, 0.060722097662874876, -1.48436655744308, 0.07700375373139699, 2.234741690198506),
        (10, 4.0, 5.358986576863276e-05, -240.5355298798893, 0.0001243811142824598, 607.9866463873157),
        (16, 0.05, 2.409452651230879e-40, -2.515357164941727e+39, 7.710214063120408e-38, 8.552173790412197e+41),
        (4, 25.0, 0.01067848966434029, -0.03888615764014338, 0.03782635433601682, 0.012087704010125405),
        (20, 7.5, 1.2450069501161585e-08, -280735.4139577138, 3.0961766530499634e-08, 729772.1055395067),
    ];

    #[test]
    fn bessel_matches_reference() {
        for &(l, x, j, y, dj, dy) in BESSEL {
            let t = BesselTable::new(l + 2, x);
            assert!(rel(t.j[l], j) < 1e-12, "j_{l}({x}) = {} vs {j}", t.j[l]);
            assert!(rel(t.y[l], y) < 1e-12, "y_{l}({x})");
            assert!(rel(t.dj[l], dj) < 1e-12, "j'_{l}({x})");
            assert!(rel(t.dy[l], dy) < 1e-12, "y'_{l}({x})");
        }
    }

    #[test]
    fn wronskian() {
        for x in [0.05, 0.7, 3.0, 12.0] {
            let t = BesselTable::new(14, x);
            for l in 0..=14 {
                let w = t.j[l] * t.dy[l] - t.dj[l] * t.y[l];
                assert!(rel(w, 1.0 / (x * x)) < 1e-10, "l={l} x={x}");
            }
        }
    }

    // Reference values from scipy.special.sph_harm.
    #[test]
    fn harmonics_match_reference() {
        let cases = [
            (2usize, 1i64, 0.7, 1.3, -0.10182444777429556, -0.36678209259077765),
            (3, -2, 2.1, -0.4, -0.2678465241435291, -0.2757851086300988),
            (5, 5, 1.0, 0.3, -0.013851133182656565, -0.1953206457528454),
            (12, -7, 0.4, 2.9, 0.006695845814616286, -0.055366523023216735),
        ];
        for (l, m, th, ph, re, im) in cases {
            let y = spherical_harmonics(12, f64::cos(th), ph)[harmonic_index(l, m)];
            assert!((y.re - re).abs() < 1e-13 && (y.im - im).abs() < 1e-13, "Y_{l}^{m}: {y}");
        }
    }

    #[test]
    fn harmonics_orthonormal_under_quadrature() {
        let lmax = 6;
        let q = SphereQuadrature::new(lmax + 1);
        let n = harmonic_count(lmax);
        let mut gram = vec![Complex::new(0.0, 0.0); n * n];
        for (p, w) in q.points.iter().zip(&q.weights) {
            let y = spherical_harmonics_at(lmax, p);
            for a in 0..n {
                for b in 0..n {
                    gram[a * n + b] += y[a].conj() * y[b] * *w;
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * n + b] - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn index_roundtrip() {
        for idx in 0..harmonic_count(20) {
            let (l, m) = harmonic_degree_order(idx);
            assert_eq!(harmonic_index(l, m), idx);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((i18 - 2.0 / 19.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn fibonacci_points_unit_and_balanced() {
        let d = fibonacci_directions(200);
        let mut c = [0.0; 3];
        for v in &d {
            assert!((crate::vec3::norm(v) - 1.0).abs() < 1e-15);
            c = crate::vec3::add(&c, v);
        }
        assert!(crate::vec3::norm(&c) / 200.0 < 1e-2);
    }
}
