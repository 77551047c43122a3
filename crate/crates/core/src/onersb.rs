//! The one-step functional and the certificate search around `q_*`.
//!
//! `P1(q, p, zeta)` equals the RS value at `q` when `zeta = 1` or `p = q`.
//! Its `zeta`-derivative at `zeta = 1` is the slope `V(p)`, which vanishes
//! to second order at `p = q_*` with Hessian `H`. A direction of positive
//! curvature therefore gives `P1 < P_RS` for `p` near `q_*` and `zeta`
//! slightly below one; [`certify`] looks for such a point on a grid.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::atline::{positivity_witness, ATReport};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, TempField};
use crate::quadrature::{nested_expect_log, QuadRule};
use crate::rs::rs_functional;
use crate::special::log_cosh;

/// Negative increments of `Q_s` smaller than this are treated as zero.
const INCREMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneRSBPoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub zeta: f64,
}

impl OneRSBPoint {
    /// Requires `0 <= q_s <= p_s <= 1` and `zeta` in `(0, 1]`.
    pub fn new(q: Vec<f64>, p: Vec<f64>, zeta: f64) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::BadDimension { expected: q.len(), got: p.len() });
        }
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(Error::BadZeta(zeta));
        }
        for (s, (&a, &b)) in q.iter().zip(&p).enumerate() {
            if !(0.0 <= a && a <= b && b <= 1.0) {
                return Err(Error::BadPoint(format!("species {s}: need 0 <= q <= p <= 1, got q = {a}, p = {b}")));
            }
        }
        Ok(Self { q, p, zeta })
    }
}

/// Per-species variances `Q1_s` and `Q2_s - Q1_s`, with the scalar terms.
struct Levels {
    outer: Vec<f64>,
    inner: Vec<f64>,
    scalar_q: f64,
    scalar_p: f64,
}

fn levels(spec: &ModelSpec, q: &[f64], p: &[f64], strict: bool) -> Result<Levels> {
    let cq = spec.contract(q)?;
    let cp = spec.contract(p)?;
    let mut inner = Vec::with_capacity(q.len());
    for (s, (a, b)) in cq.per_species.iter().zip(&cp.per_species).enumerate() {
        let inc = b - a;
        if strict && inc < -INCREMENT_TOL {
            return Err(Error::NonmonotoneOverlap { species: s, increment: inc });
        }
        inner.push(if strict { inc.max(0.0) } else { inc });
    }
    Ok(Levels {
        outer: cq.per_species.iter().map(|v| v.max(0.0)).collect(),
        inner,
        scalar_q: cq.scalar,
        scalar_p: cp.scalar,
    })
}

/// The one-step functional at `point`.
pub fn p1rsb(spec: &ModelSpec, tf: TempField, point: &OneRSBPoint, rule: &QuadRule) -> Result<f64> {
    let m = spec.species();
    if point.q.len() != m {
        return Err(Error::BadDimension { expected: m, got: point.q.len() });
    }
    let lv = levels(spec, &point.q, &point.p, true)?;
    let full = spec.full_contraction();
    let b2 = tf.beta * tf.beta;
    let zeta = point.zeta;
    let mut value = std::f64::consts::LN_2;
    for (s, &lambda) in spec.lambda().iter().enumerate() {
        let e = nested_expect_log(
            rule,
            rule,
            lv.inner[s].sqrt(),
            lv.outer[s].sqrt(),
            tf.h,
            tf.beta,
            zeta,
            log_cosh,
        )?;
        let q2 = lv.outer[s] + lv.inner[s];
        value += lambda * (e + 0.5 * b2 * (full.per_species[s] - q2));
    }
    value -= 0.5 * b2 * (full.scalar - lv.scalar_p + zeta * (lv.scalar_p - lv.scalar_q));
    if !value.is_finite() {
        return Err(Error::Overflow(format!("one-step functional is not finite: {value}")));
    }
    Ok(value)
}

/// `dP1/dzeta` at `zeta = 1`, inner overlap `q_star`, outer overlap `p`.
///
/// Requires the inner variances `Q2_s - Q1_s` to be nonnegative.
pub fn zeta_slope(spec: &ModelSpec, tf: TempField, q_star: &[f64], p: &[f64], rule: &QuadRule) -> Result<f64> {
    slope(spec, tf, q_star, p, rule, true)
}

/// [`zeta_slope`] continued analytically to negative inner variances, so
/// that finite differences can straddle `q_star`.
///
/// The continuation replaces the inner Gaussian shift `sqrt(c) x` by
/// `i sqrt(-c) x` and is valid while every shifted argument stays within
/// `pi/2` of the real axis; beyond that it returns `Unsupported`.
pub fn zeta_slope_continued(
    spec: &ModelSpec,
    tf: TempField,
    q_star: &[f64],
    p: &[f64],
    rule: &QuadRule,
) -> Result<f64> {
    slope(spec, tf, q_star, p, rule, false)
}

fn slope(spec: &ModelSpec, tf: TempField, q: &[f64], p: &[f64], rule: &QuadRule, strict: bool) -> Result<f64> {
    let m = spec.species();
    if q.len() != m || p.len() != m {
        return Err(Error::BadDimension { expected: m, got: if q.len() != m { q.len() } else { p.len() } });
    }
    let lv = levels(spec, q, p, strict)?;
    let node_max = rule.nodes().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut value = 0.0;
    for (s, &lambda) in spec.lambda().iter().enumerate() {
        let c = lv.inner[s];
        if c == 0.0 {
            continue;
        }
        let spread = tf.beta * c.abs().sqrt();
        if c < 0.0 && spread * node_max >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Unsupported(format!(
                "continuation to inner variance {c:e} leaves the strip of validity"
            )));
        }
        let outer = tf.beta * lv.outer[s].sqrt();
        let mut acc = 0.0;
        for (x1, w1) in rule.iter() {
            let tau = (outer * x1 + tf.h).tanh();
            let mut ez = 0.0;
            let mut ephi = 0.0;
            for (x2, w2) in rule.iter() {
                let z = relative_shift(tau, spread * x2, c < 0.0);
                ez += w2 * z.re;
                ephi += w2 * phi(z).re;
            }
            acc += w1 * (ephi / (1.0 + ez) + psi(ez));
        }
        value += lambda * acc;
    }
    value -= 0.5 * tf.beta * tf.beta * (lv.scalar_p - lv.scalar_q);
    Ok(value)
}

/// `z` with `cosh(y + d) = cosh(y) (1 + z)` and `tau = tanh y`; for a
/// continued shift `d = i a`.
fn relative_shift(tau: f64, a: f64, imaginary: bool) -> Complex<f64> {
    if imaginary {
        let s = (0.5 * a).sin();
        Complex::new(-2.0 * s * s, tau * a.sin())
    } else {
        let s = (0.5 * a).sinh();
        Complex::new(2.0 * s * s + tau * a.sinh(), 0.0)
    }
}

/// `(1 + z) log(1 + z) - z`, by series near zero.
fn phi(z: Complex<f64>) -> Complex<f64> {
    if z.norm() < 1e-2 {
        // sum_{n >= 2} (-1)^n z^n / (n (n - 1))
        let mut term = z * z;
        let mut sum = Complex::new(0.0, 0.0);
        for n in 2..14 {
            let nf = n as f64;
            sum += term / (nf * (nf - 1.0));
            term *= -z;
        }
        sum
    } else {
        let one = Complex::new(1.0, 0.0);
        (one + z) * (one + z).ln() - z
    }
}

/// `w / (1 + w) - log(1 + w)`, by series near zero.
fn psi(w: f64) -> f64 {
    if w.abs() < 1e-2 {
        // sum_{n >= 2} (-1)^(n+1) (n - 1) w^n / n
        let mut term = w * w;
        let mut sum = 0.0;
        for n in 2..16 {
            let nf = n as f64;
            sum -= term * (nf - 1.0) / nf;
            term *= -w;
        }
        sum
    } else {
        w / (1.0 + w) - w.ln_1p()
    }
}

/// Log-spaced grid from `a` to `b` inclusive.
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub epsilons: Vec<f64>,
    pub zetas: Vec<f64>,
    /// Minimum `P_RS - P1` accepted as a certificate.
    pub gap_floor: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { epsilons: geomspace(1e-3, 1e-1, 10), zetas: geomspace(0.5, 0.99, 10), gap_floor: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneRSBCertificate {
    pub epsilon: f64,
    /// Direction, scaled to max-norm one.
    pub x: Vec<f64>,
    pub zeta: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub value: f64,
    pub rs_value: f64,
    pub gap: f64,
    /// Largest gap over the full grid and where it occurred.
    pub max_gap: f64,
    pub max_gap_epsilon: f64,
    pub max_gap_zeta: f64,
}

/// Scans the grid along `Lambda^{-1} x` for the report's witness `x`, the
/// direction in `p` on which `V` has the same curvature sign as `x^T K x`,
/// and along the nonnegative direction of largest curvature of `H`. The
/// certificate with the larger maximal gap is returned; it records the
/// direction used.
pub fn certify(
    spec: &ModelSpec,
    tf: TempField,
    report: &ATReport,
    rule: &QuadRule,
    opts: &CertifyOptions,
) -> Result<OneRSBCertificate> {
    let x = report
        .witness_x
        .as_deref()
        .ok_or_else(|| Error::InvalidParams(format!("no witness direction at verdict {}", report.verdict)))?;
    let mut directions = vec![x.iter().zip(spec.lambda()).map(|(x, l)| x / l).collect::<Vec<f64>>()];
    directions.extend(steepest_nonnegative(&report.hessian_matrix()));
    let mut best: Option<OneRSBCertificate> = None;
    let mut missed = f64::NEG_INFINITY;
    for d in &directions {
        match certify_along(spec, tf, &report.rs.q_star, d, rule, opts) {
            Ok(c) => {
                if best.as_ref().map_or(true, |b| c.max_gap > b.max_gap) {
                    best = Some(c);
                }
            }
            Err(Error::CertificateNotFound { max_gap }) => missed = missed.max(max_gap),
            Err(e) => return Err(e),
        }
    }
    best.ok_or(Error::CertificateNotFound { max_gap: missed })
}

/// The top eigenvector of `H` when it is sign-constant, otherwise any
/// nonnegative positive-curvature direction.
fn steepest_nonnegative(h: &nalgebra::DMatrix<f64>) -> Option<Vec<f64>> {
    let eig = h.clone().symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(top);
    if eig.eigenvalues[top] > 0.0 && (v.iter().all(|&c| c >= 0.0) || v.iter().all(|&c| c <= 0.0)) {
        return Some(v.iter().map(|c| c.abs()).collect());
    }
    positivity_witness(h)
}

/// Scans `p = q_star + eps x` (clamped to one) and `zeta` over the grid.
/// The first grid point in `(eps, zeta)` order with a gap above the floor
/// is returned; the maximum gap over all points is recorded as well.
pub fn certify_along(
    spec: &ModelSpec,
    tf: TempField,
    q_star: &[f64],
    x: &[f64],
    rule: &QuadRule,
    opts: &CertifyOptions,
) -> Result<OneRSBCertificate> {
    if x.len() != q_star.len() {
        return Err(Error::BadDimension { expected: q_star.len(), got: x.len() });
    }
    let scale = x.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if scale == 0.0 || x.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParams(format!("direction must be nonnegative and nonzero: {x:?}")));
    }
    let x: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let rs_value = rs_functional(spec, tf, q_star, rule)?;
    let mut first: Option<OneRSBCertificate> = None;
    let mut best = (f64::NEG_INFINITY, f64::NAN, f64::NAN);
    for &eps in &opts.epsilons {
        let p: Vec<f64> = q_star.iter().zip(&x).map(|(q, d)| (q + eps * d).min(1.0)).collect();
        for &zeta in &opts.zetas {
            let point = OneRSBPoint::new(q_star.to_vec(), p.clone(), zeta)?;
            let value = p1rsb(spec, tf, &point, rule)?;
            let gap = rs_value - value;
            if gap > best.0 {
                best = (gap, eps, zeta);
            }
            if first.is_none() && gap > opts.gap_floor {
                first = Some(OneRSBCertificate {
                    epsilon: eps,
                    x: x.clone(),
                    zeta,
                    q: q_star.to_vec(),
                    p: p.clone(),
                    value,
                    rs_value,
                    gap,
                    max_gap: gap,
                    max_gap_epsilon: eps,
                    max_gap_zeta: zeta,
                });
            }
        }
    }
    match first {
        Some(mut c) => {
            c.max_gap = best.0;
            c.max_gap_epsilon = best.1;
            c.max_gap_zeta = best.2;
            Ok(c)
        }
        None => Err(Error::CertificateNotFound { max_gap: best.0 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atline::{at_line_beta, at_verdict, Verdict};
    use crate::parisi::{evaluate, ParisiParams};
    use crate::rs::{solve_fixed_point, SolverOptions};

    fn reference() -> ModelSpec {
        ModelSpec::two_species(1.5, 1.2, 0.6).unwrap()
    }

    #[test]
    fn point_validation() {
        assert!(matches!(OneRSBPoint::new(vec![0.3], vec![0.2], 0.5), Err(Error::BadPoint(_))));
        assert!(matches!(OneRSBPoint::new(vec![0.3], vec![0.4], 0.0), Err(Error::BadZeta(_))));
        assert!(matches!(OneRSBPoint::new(vec![0.3], vec![0.4], 1.5), Err(Error::BadZeta(_))));
        assert!(OneRSBPoint::new(vec![0.3, 0.1], vec![0.4, 0.1], 1.0).is_ok());
    }

    #[test]
    fn collapses_to_rs() {
        let spec = reference();
        let rule = QuadRule::default();
        let tf = TempField::new(0.9, 0.3).unwrap();
        let q = [0.25, 0.35];
        let rs = rs_functional(&spec, tf, &q, &rule).unwrap();
        for &zeta in &[0.2, 0.6, 1.0] {
            let flat = OneRSBPoint::new(q.to_vec(), q.to_vec(), zeta).unwrap();
            assert!((p1rsb(&spec, tf, &flat, &rule).unwrap() - rs).abs() < 1e-12);
        }
        let outer = OneRSBPoint::new(q.to_vec(), vec![0.4, 0.5], 1.0).unwrap();
        assert!((p1rsb(&spec, tf, &outer, &rule).unwrap() - rs).abs() < 1e-10);
    }

    #[test]
    fn matches_generic_recursion() {
        let spec = reference();
        let rule = QuadRule::gauss_hermite(31).unwrap();
        let tf = TempField::new(1.1, 0.2).unwrap();
        let point = OneRSBPoint::new(vec![0.2, 0.3], vec![0.6, 0.5], 0.45).unwrap();
        let a = p1rsb(&spec, tf, &point, &rule).unwrap();
        let params = ParisiParams::one_step(&point.q, &point.p, point.zeta).unwrap();
        let b = evaluate(&spec, tf, &params, &rule).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn slope_matches_one_sided_difference() {
        let spec = reference();
        let rule = QuadRule::default();
        let tf = TempField::new(0.9, 0.3).unwrap();
        let (q, p) = (vec![0.25, 0.35], vec![0.45, 0.5]);
        let at = |z: f64| p1rsb(&spec, tf, &OneRSBPoint::new(q.clone(), p.clone(), z).unwrap(), &rule).unwrap();
        let d = 1e-4;
        let fd = (3.0 * at(1.0) - 4.0 * at(1.0 - d) + at(1.0 - 2.0 * d)) / (2.0 * d);
        let v = zeta_slope(&spec, tf, &q, &p, &rule).unwrap();
        assert!((fd - v).abs() < 1e-7 * v.abs().max(1.0), "{fd} vs {v}");
    }

    fn critical_point(beta: f64, h: f64) -> (ModelSpec, TempField, Vec<f64>, QuadRule) {
        let spec = reference();
        let rule = QuadRule::default();
        let tf = TempField::new(beta, h).unwrap();
        let rs = solve_fixed_point(&spec, tf, &rule, &SolverOptions::default()).unwrap();
        (spec, tf, rs.q_star, rule)
    }

    #[test]
    fn slope_vanishes_to_second_order() {
        let (spec, tf, q, rule) = critical_point(0.9, 0.3);
        assert_eq!(zeta_slope(&spec, tf, &q, &q, &rule).unwrap(), 0.0);
        let step = 1e-5;
        for s in 0..2 {
            let mut up = q.clone();
            let mut down = q.clone();
            up[s] += step;
            down[s] -= step;
            let g = (zeta_slope_continued(&spec, tf, &q, &up, &rule).unwrap()
                - zeta_slope_continued(&spec, tf, &q, &down, &rule).unwrap())
                / (2.0 * step);
            assert!(g.abs() < 1e-8, "gradient component {s}: {g}");
        }
    }

    #[test]
    fn continuation_agrees_across_zero() {
        // on a line through q_star the slope is a smooth function of the offset
        let (spec, tf, q, rule) = critical_point(0.9, 0.3);
        let at = |t: f64| {
            let p: Vec<f64> = q.iter().map(|v| v + t).collect();
            zeta_slope_continued(&spec, tf, &q, &p, &rule).unwrap()
        };
        let h = 1e-3;
        // a quadratic through zero has V(t) + V(-t) = 2 V(h) (t/h)^2 to leading order
        let sym = (at(h) + at(-h)) / 2.0;
        let sym2 = (at(2.0 * h) + at(-2.0 * h)) / 2.0;
        assert!((sym2 / sym - 4.0).abs() < 1e-2, "{}", sym2 / sym);
    }

    #[test]
    fn hessian_matches_k_conjugation() {
        let (spec, tf, q, rule) = critical_point(0.9, 0.3);
        let report = at_verdict(&spec, tf, &rule, &SolverOptions::default()).unwrap();
        let h = report.hessian_matrix();
        let step = 1e-4;
        let v = |d: [f64; 2]| {
            let p = [q[0] + d[0], q[1] + d[1]];
            zeta_slope_continued(&spec, tf, &q, &p, &rule).unwrap()
        };
        for i in 0..2 {
            for j in 0..2 {
                let mut e = [[0.0; 2]; 2];
                e[0][i] += step;
                e[1][j] += step;
                let pp = v([e[0][0] + e[1][0], e[0][1] + e[1][1]]);
                let pm = v([e[0][0] - e[1][0], e[0][1] - e[1][1]]);
                let mp = v([-e[0][0] + e[1][0], -e[0][1] + e[1][1]]);
                let mm = v([-e[0][0] - e[1][0], -e[0][1] - e[1][1]]);
                let fd = (pp - pm - mp + mm) / (4.0 * step * step);
                assert!(
                    (fd - h[(i, j)]).abs() < 1e-5 * h.norm(),
                    "H[{i}][{j}]: fd {fd} vs {}",
                    h[(i, j)]
                );
            }
        }
    }

    #[test]
    fn quadratic_growth_along_witness() {
        let spec = reference();
        let rule = QuadRule::default();
        let opts = SolverOptions::default();
        let h = 0.3;
        let line = at_line_beta(&spec, h, &rule, &opts, 1e-10).unwrap();
        let tf = TempField::new(line.beta * 1.2, h).unwrap();
        let report = at_verdict(&spec, tf, &rule, &opts).unwrap();
        assert_eq!(report.verdict, Verdict::RsbCertified);
        let x = report.witness_x.clone().unwrap();
        let hm = report.hessian_matrix();
        let curv = (0..2).map(|i| (0..2).map(|j| x[i] * hm[(i, j)] * x[j]).sum::<f64>()).sum::<f64>();
        let q = &report.rs.q_star;
        let eps = 1e-3;
        let p: Vec<f64> = q.iter().zip(&x).map(|(a, b)| a + eps * b).collect();
        let v = zeta_slope(&spec, tf, q, &p, &rule).unwrap();
        let predicted = 0.5 * eps * eps * curv;
        assert!(v > 0.0);
        assert!((v / predicted - 1.0).abs() < 1e-2, "{v} vs {predicted}");
    }

    #[test]
    fn gaussian_interpolation_identity() {
        // d/dc E f(y + beta sqrt(c) eta) = beta^2/2 E f'', with f = sinh tanh
        let rule = QuadRule::default();
        let f = |y: f64| y.sinh() * y.tanh();
        let f2 = |y: f64| f(y) + 2.0 / y.cosh().powi(3);
        let (beta, y0) = (0.8, 0.3);
        let e = |c: f64, g: &dyn Fn(f64) -> f64| rule.iter().map(|(x, w)| w * g(y0 + beta * c.sqrt() * x)).sum::<f64>();
        for &c in &[0.1, 0.4, 0.9] {
            let d = 1e-5;
            let lhs = (e(c + d, &f) - e(c - d, &f)) / (2.0 * d);
            let rhs = 0.5 * beta * beta * e(c, &f2);
            assert!((lhs - rhs).abs() < 1e-7, "c = {c}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn certificate_above_the_line() {
        let spec = reference();
        let rule = QuadRule::default();
        let opts = SolverOptions::default();
        let h = 0.4;
        let line = at_line_beta(&spec, h, &rule, &opts, 1e-10).unwrap();
        let tf = TempField::new(line.beta * 1.05f64.sqrt(), h).unwrap();
        let report = at_verdict(&spec, tf, &rule, &opts).unwrap();
        let cert = certify(&spec, tf, &report, &rule, &CertifyOptions::default()).unwrap();
        assert!(cert.gap > 1e-10);
        assert!(cert.max_gap >= cert.gap);
        assert!(cert.p.iter().zip(&cert.q).all(|(p, q)| p >= q && *p <= 1.0));
    }

    #[test]
    fn no_certificate_below_the_line() {
        let spec = reference();
        let rule = QuadRule::default();
        let opts = SolverOptions::default();
        let h = 0.4;
        let line = at_line_beta(&spec, h, &rule, &opts, 1e-10).unwrap();
        let tf = TempField::new(line.beta * 0.5f64.sqrt(), h).unwrap();
        let report = at_verdict(&spec, tf, &rule, &opts).unwrap();
        assert_eq!(report.verdict, Verdict::RsConsistent);
        assert!(matches!(
            certify(&spec, tf, &report, &rule, &CertifyOptions::default()),
            Err(Error::InvalidParams(_))
        ));
        for x in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            let r = certify_along(&spec, tf, &report.rs.q_star, &x, &rule, &CertifyOptions::default());
            assert!(matches!(r, Err(Error::CertificateNotFound { max_gap }) if max_gap <= 1e-10), "{r:?}");
        }
    }

    #[test]
    fn geomspace_endpoints() {
        let g = geomspace(1e-3, 1e-1, 10);
        assert_eq!(g.len(), 10);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[9] - 1e-1).abs() < 1e-15);
        assert!(g.windows(2).all(|w| (w[1] / w[0] - 10f64.powf(2.0 / 9.0)).abs() < 1e-12));
    }
}
