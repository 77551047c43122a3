//! The symmetry-breaking test at a replica-symmetric critical point.
//!
//! At the critical point `q_*`, `gamma_s = lambda_s E sech^4(beta eta sqrt(Q1_s) + h)`
//! and `K = 2 beta^2 D Gamma D - D` with `D` the variance matrix. The
//! Hessian of the 1RSB slope is `H = beta^2 Lambda K Lambda`; any nonnegative
//! `x` with `x^T K x > 0` certifies symmetry breaking. For two species this
//! reduces to the single inequality `beta^2 > beta2_m`, with `beta2_m` in
//! closed form in terms of `gamma`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, ModelSpec, TempField, ValidationMode};
use crate::quadrature::{GaussianArg, QuadRule};
use crate::rs::{solve_fixed_point, RSSolution, SolverOptions};
use crate::special::sech4;

/// `|beta^2 - beta2_m|` below this is reported as indeterminate.
pub const VERDICT_BAND: f64 = 1e-12;

/// A witness must satisfy `x^T K x > WITNESS_FLOOR * |K|`.
pub const WITNESS_FLOOR: f64 = 1e-14;

/// `gamma_s = lambda_s E sech^4(beta eta sqrt(Q1_s) + h)`.
pub fn gamma(spec: &ModelSpec, tf: TempField, rs: &RSSolution, rule: &QuadRule) -> Result<Vec<f64>> {
    spec.lambda()
        .iter()
        .zip(&rs.q_vec)
        .map(|(&lambda, &big_q)| {
            let e = rule.expect(GaussianArg::new(tf.beta, big_q.max(0.0).sqrt(), tf.h), sech4)?;
            Ok(lambda * e)
        })
        .collect()
}

/// `K = 2 beta^2 D Gamma D - D` and `H = beta^2 Lambda K Lambda`, any `M`.
pub fn hessian(spec: &ModelSpec, tf: TempField, gamma: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = spec.species();
    if gamma.len() != m {
        return Err(Error::BadDimension { expected: m, got: gamma.len() });
    }
    let d = spec.delta2_matrix();
    let g = DMatrix::from_diagonal(&DVector::from_column_slice(gamma));
    let l = DMatrix::from_diagonal(&DVector::from_column_slice(spec.lambda()));
    let b2 = tf.beta * tf.beta;
    let k = (&d * &g * &d) * (2.0 * b2) - &d;
    let k = (&k + k.transpose()) * 0.5;
    let h = (&l * &k * &l) * b2;
    Ok((k, h))
}

/// The five `beta^2` thresholds of the two-species case split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Species 1 alone: `K_11 > 0` iff `beta^2 > beta2_u`.
    pub beta2_u: f64,
    /// Species 2 alone: `K_22 > 0` iff `beta^2 > beta2_t`.
    pub beta2_t: f64,
    /// `K_12 > 0` iff `beta^2 > beta2_v`.
    pub beta2_v: f64,
    /// The symmetry-breaking threshold.
    pub beta2_m: f64,
    /// Upper root of the determinant condition; infinite when `d11 d22 = 1`.
    #[serde(rename = "beta2_M")]
    pub beta2_big_m: f64,
}

impl Thresholds {
    /// `0 < v < m < min(u, t) <= max(u, t) < M`.
    pub fn is_ordered(&self) -> bool {
        let lo = self.beta2_u.min(self.beta2_t);
        let hi = self.beta2_u.max(self.beta2_t);
        0.0 < self.beta2_v
            && self.beta2_v < self.beta2_m
            && self.beta2_m < self.beta2_big_m
            && self.beta2_m < lo
            && hi < self.beta2_big_m
    }
}

pub fn thresholds_2species(spec: &ModelSpec, gamma: &[f64]) -> Result<Thresholds> {
    if spec.species() != 2 || gamma.len() != 2 {
        return Err(Error::Unsupported(format!(
            "closed-form thresholds need two species, got {}",
            spec.species()
        )));
    }
    let (d11, d22) = (spec.d2(0, 0), spec.d2(1, 1));
    let (g1, g2) = (gamma[0], gamma[1]);
    let sum = g1 * d11 + g2 * d22;
    let diff = g1 * d11 - g2 * d22;
    let root = (diff * diff + 4.0 * g1 * g2).sqrt();
    Ok(Thresholds {
        beta2_u: d11 / (2.0 * (g1 * d11 * d11 + g2)),
        beta2_t: d22 / (2.0 * (g1 + g2 * d22 * d22)),
        beta2_v: 1.0 / (2.0 * sum),
        beta2_m: 1.0 / (sum + root),
        beta2_big_m: 1.0 / (sum - root),
    })
}

/// The two-species case split on `K = [[u, v], [v, t]]`: a nonnegative `x`
/// with `x^T K x > 0` exists iff `u > 0`, `t > 0`, or `u, t <= 0` and
/// `sqrt(u t) < v`.
pub fn two_species_condition(k: &DMatrix<f64>) -> bool {
    let (u, t, v) = (k[(0, 0)], k[(1, 1)], k[(0, 1)]);
    u > 0.0 || t > 0.0 || (u * t).sqrt() < v
}

/// A nonnegative direction of positive curvature for `K`, if one is found.
///
/// For `M = 2` the search is exact. For larger `M` it tries the top
/// eigenvector and then a projected ascent on the nonnegative orthant from
/// each axis; `None` there means "not found", not "does not exist".
pub fn positivity_witness(k: &DMatrix<f64>) -> Option<Vec<f64>> {
    let floor = WITNESS_FLOOR * k.norm();
    let accept = |x: DVector<f64>| -> Option<Vec<f64>> {
        let x = x.map(|v| v.max(0.0));
        (quad_form(k, &x) > floor).then(|| x.iter().copied().collect())
    };
    let m = k.nrows();
    if m == 2 {
        let (u, t, v) = (k[(0, 0)], k[(1, 1)], k[(0, 1)]);
        if u > 0.0 {
            return accept(DVector::from_vec(vec![1.0, 0.0]));
        }
        if t > 0.0 {
            return accept(DVector::from_vec(vec![0.0, 1.0]));
        }
        if (u * t).sqrt() < v {
            if u < 0.0 && t < 0.0 {
                // x^T K x = 2 sqrt(ut) (v - sqrt(ut))
                return accept(DVector::from_vec(vec![(-t).sqrt(), (-u).sqrt()]));
            }
            // a zero diagonal with v > 0: tilt toward the zero-curvature axis
            let x = if u == 0.0 && t == 0.0 {
                vec![1.0, 1.0]
            } else if u == 0.0 {
                vec![1.0, v / (-t)]
            } else {
                vec![v / (-u), 1.0]
            };
            return accept(DVector::from_vec(x));
        }
        return None;
    }

    for i in 0..m {
        if k[(i, i)] > 0.0 {
            let mut e = DVector::zeros(m);
            e[i] = 1.0;
            if let Some(x) = accept(e) {
                return Some(x);
            }
        }
    }
    let eig = k.clone().symmetric_eigen();
    let (top, &top_value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if top_value <= floor {
        return None;
    }
    let vec = eig.eigenvectors.column(top).into_owned();
    if vec.iter().all(|&c| c >= -1e-12) || vec.iter().all(|&c| c <= 1e-12) {
        let sign = if vec.sum() < 0.0 { -1.0 } else { 1.0 };
        if let Some(x) = accept(vec * sign) {
            return Some(x);
        }
    }
    let step = 1.0 / k.norm().max(f64::MIN_POSITIVE);
    for i in 0..m {
        let mut x = DVector::from_element(m, 1e-3);
        x[i] = 1.0;
        for _ in 0..2000 {
            let grad = k * &x;
            x = (&x + grad * step).map(|v| v.max(0.0));
            let n = x.norm();
            if n == 0.0 {
                break;
            }
            x /= n;
        }
        if let Some(w) = accept(x) {
            return Some(w);
        }
    }
    None
}

fn quad_form(k: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    (x.transpose() * k * x)[(0, 0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    RsConsistent,
    RsbCertified,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::RsConsistent => "RS-consistent",
            Verdict::RsbCertified => "RSB-certified",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ATReport {
    pub beta: f64,
    pub h: f64,
    pub rs: RSSolution,
    pub gamma: Vec<f64>,
    /// Row-major `M x M`.
    pub k: Vec<Vec<f64>>,
    pub hessian: Vec<Vec<f64>>,
    /// Two species only.
    pub thresholds: Option<Thresholds>,
    pub verdict: Verdict,
    pub witness_x: Option<Vec<f64>>,
    /// The verdict is proven rather than heuristic: standard assumptions,
    /// `h > 0`, and a unique critical point.
    pub rigorous: bool,
}

impl ATReport {
    pub fn k_matrix(&self) -> DMatrix<f64> {
        to_matrix(&self.k)
    }

    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        to_matrix(&self.hessian)
    }
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Solves the RS fixed point and classifies `(beta, h)`.
///
/// With two species the verdict is `beta^2` against `beta2_m` (inside
/// [`VERDICT_BAND`] it is indeterminate) and the witness search must agree
/// with it. With more species the verdict rests on the witness search alone
/// and is never RS-consistent.
pub fn at_verdict(spec: &ModelSpec, tf: TempField, rule: &QuadRule, opts: &SolverOptions) -> Result<ATReport> {
    let rs = solve_fixed_point(spec, tf, rule, opts)?;
    report_at(spec, tf, rs, rule)
}

/// [`at_verdict`] for an already solved critical point.
pub fn report_at(spec: &ModelSpec, tf: TempField, rs: RSSolution, rule: &QuadRule) -> Result<ATReport> {
    let gamma = gamma(spec, tf, &rs, rule)?;
    let (k, h) = hessian(spec, tf, &gamma)?;
    let witness = positivity_witness(&k);
    let b2 = tf.beta * tf.beta;
    let (thresholds, verdict) = if spec.species() == 2 {
        let th = thresholds_2species(spec, &gamma)?;
        let gap = b2 - th.beta2_m;
        let verdict = if gap.abs() <= VERDICT_BAND {
            Verdict::Indeterminate
        } else if gap > 0.0 {
            if witness.is_some() {
                Verdict::RsbCertified
            } else {
                Verdict::Indeterminate
            }
        } else {
            Verdict::RsConsistent
        };
        // the closed form and the case split must agree away from the line
        if gap.abs() > 1e-9 * th.beta2_m && (gap > 0.0) != witness.is_some() {
            return Err(Error::InternalInconsistency(format!(
                "beta^2 - beta2_m = {gap:e} but witness search returned {witness:?}"
            )));
        }
        (Some(th), verdict)
    } else if witness.is_some() {
        (None, Verdict::RsbCertified)
    } else {
        (None, Verdict::Indeterminate)
    };
    let standard = validate(spec, ValidationMode::TwoSpeciesStandard).passed();
    Ok(ATReport {
        beta: tf.beta,
        h: tf.h,
        rigorous: standard && tf.h > 0.0 && rs.unique,
        witness_x: if verdict == Verdict::RsbCertified { witness } else { None },
        rs,
        gamma,
        k: to_rows(&k),
        hessian: to_rows(&h),
        thresholds,
        verdict,
    })
}

/// `beta2_m` evaluated at the critical point for `(beta, h)`.
pub fn beta2_m_at(spec: &ModelSpec, tf: TempField, rule: &QuadRule, opts: &SolverOptions) -> Result<f64> {
    let rs = solve_fixed_point(spec, tf, rule, opts)?;
    let g = gamma(spec, tf, &rs, rule)?;
    Ok(thresholds_2species(spec, &g)?.beta2_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtLinePoint {
    pub h: f64,
    pub beta: f64,
    pub beta2_m: f64,
    pub bisection_steps: usize,
}

/// Finds `beta` with `beta^2 = beta2_m(beta)` at field `h` by bisection to
/// `beta_tol`.
pub fn at_line_beta(
    spec: &ModelSpec,
    h: f64,
    rule: &QuadRule,
    opts: &SolverOptions,
    beta_tol: f64,
) -> Result<AtLinePoint> {
    let g = |beta: f64| -> Result<(f64, f64)> {
        let tf = TempField::new(beta, h)?;
        let m = beta2_m_at(spec, tf, rule, opts)?;
        Ok((beta * beta - m, m))
    };
    let mut lo = 1e-3;
    let (g_lo, _) = g(lo)?;
    if g_lo >= 0.0 {
        return Err(Error::InvalidParams(format!("no sign change: g({lo}) = {g_lo} >= 0")));
    }
    let mut hi = 0.5;
    let mut bracketed = false;
    for _ in 0..12 {
        let (g_hi, _) = g(hi)?;
        if g_hi > 0.0 {
            bracketed = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !bracketed {
        return Err(Error::InvalidParams(format!("could not bracket the line at h = {h}")));
    }
    let mut steps = 0;
    while hi - lo > beta_tol {
        let mid = 0.5 * (lo + hi);
        let (gm, _) = g(mid)?;
        if gm > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    let beta = 0.5 * (lo + hi);
    let (_, beta2_m) = g(beta)?;
    Ok(AtLinePoint { h, beta, beta2_m, bisection_steps: steps })
}
