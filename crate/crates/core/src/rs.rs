//! Replica-symmetric functional, its gradient, the fixed-point solver for
//! the critical-point set, and the two-species uniqueness threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, ModelSpec, TempField, ValidationMode};
use crate::quadrature::{GaussianArg, QuadRule};
use crate::special::{log_cosh, tanh2};

/// Replica-symmetric value at overlap vector `q`:
/// `log 2 + sum_s lambda_s [E log cosh(beta eta sqrt(Q1_s) + h) + beta^2/2 (Q2_s - Q1_s)] - beta^2/2 (Q2 - Q1)`
/// where the `Q2` terms come from `q = 1`.
pub fn rs_functional(spec: &ModelSpec, tf: TempField, q: &[f64], rule: &QuadRule) -> Result<f64> {
    let inner = spec.contract(q)?;
    let top = spec.full_contraction();
    let b2 = tf.beta * tf.beta;
    let mut value = std::f64::consts::LN_2;
    for (s, &lambda) in spec.lambda().iter().enumerate() {
        let scale = inner.per_species[s].max(0.0).sqrt();
        let e = rule.expect(GaussianArg::new(tf.beta, scale, tf.h), log_cosh)?;
        value += lambda * (e + 0.5 * b2 * (top.per_species[s] - inner.per_species[s]));
    }
    Ok(value - 0.5 * b2 * (top.scalar - inner.scalar))
}

/// `T_s(q) = E tanh^2(beta eta sqrt(Q1_s(q)) + h)`.
pub fn fixed_point_map(spec: &ModelSpec, tf: TempField, q: &[f64], rule: &QuadRule) -> Result<Vec<f64>> {
    let c = spec.contract(q)?;
    c.per_species
        .iter()
        .map(|&big_q| rule.expect(GaussianArg::new(tf.beta, big_q.max(0.0).sqrt(), tf.h), tanh2))
        .collect()
}

/// Analytic gradient:
/// `d/dq_t = beta^2 lambda_t sum_s delta2_st lambda_s [q_s - T_s(q)]`.
pub fn rs_gradient(spec: &ModelSpec, tf: TempField, q: &[f64], rule: &QuadRule) -> Result<Vec<f64>> {
    let t = fixed_point_map(spec, tf, q, rule)?;
    let m = spec.species();
    let lambda = spec.lambda();
    let b2 = tf.beta * tf.beta;
    Ok((0..m)
        .map(|j| {
            b2 * lambda[j]
                * (0..m)
                    .map(|s| spec.d2(s, j) * lambda[s] * (q[s] - t[s]))
                    .sum::<f64>()
        })
        .collect())
}

/// `1 / (l1 d11 + l2 d22 + sqrt((l1 d11 - l2 d22)^2 + 4 l1 l2))`: below this
/// `beta^2` the critical-point set at `h = 0` is a singleton.
pub fn uniqueness_threshold(spec: &ModelSpec) -> Result<f64> {
    if spec.species() != 2 {
        return Err(Error::Unsupported(format!(
            "uniqueness threshold is closed-form only for two species, got {}",
            spec.species()
        )));
    }
    let l = spec.lambda();
    let (a, b) = (l[0] * spec.d2(0, 0), l[1] * spec.d2(1, 1));
    Ok(1.0 / (a + b + ((a - b) * (a - b) + 4.0 * l[0] * l[1]).sqrt()))
}

/// Whether the critical point is provably unique: the two-species standard
/// assumptions (or the all-ones SK reduction) together with `h > 0` or
/// `beta^2` below [`uniqueness_threshold`].
pub fn uniqueness_guaranteed(spec: &ModelSpec, tf: TempField) -> bool {
    if spec.species() != 2 {
        return false;
    }
    let standard = validate(spec, ValidationMode::TwoSpeciesStandard).passed();
    let sk = spec.is_sk_reduction() && validate(spec, ValidationMode::Convex).passed();
    if !(standard || sk) {
        return false;
    }
    tf.h > 0.0
        || uniqueness_threshold(spec)
            .map(|b0| tf.beta * tf.beta < b0)
            .unwrap_or(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when `|T(q) - q|_inf < tol * min(1, max(|T(q)|_inf, tol))`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial damping; halved whenever a component of the step reverses sign.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 20_000, damping: 0.5 }
    }
}

/// A single critical point found by the multistart solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub q: Vec<f64>,
    pub rs_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSSolution {
    pub q_star: Vec<f64>,
    /// `Q1_s` induced by `q_star`.
    pub q_vec: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub on_boundary: Vec<bool>,
    pub rs_value: f64,
    /// Every distinct limit reached from the standard starting points. A
    /// single entry when uniqueness is guaranteed.
    pub candidates: Vec<Candidate>,
    /// True when uniqueness is proven for `(spec, beta, h)`; otherwise
    /// `q_star` is the smallest-value candidate of a multistart heuristic.
    pub unique: bool,
}

/// Two limits closer than this in max-norm are treated as the same point.
pub const DISTINCT_TOL: f64 = 1e-6;

/// Damped iteration `q <- (1 - a) q + a T(q)` from `q0`, clamped to the unit box.
pub fn iterate_from(
    spec: &ModelSpec,
    tf: TempField,
    rule: &QuadRule,
    opts: &SolverOptions,
    q0: &[f64],
) -> Result<RSSolution> {
    let m = spec.species();
    if q0.len() != m {
        return Err(Error::BadDimension { expected: m, got: q0.len() });
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) || !(opts.tol > 0.0) {
        return Err(Error::InvalidParams(format!("bad solver options {opts:?}")));
    }
    let mut q: Vec<f64> = q0.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut alpha = opts.damping;
    let mut last_step: Vec<f64> = vec![0.0; m];
    for it in 0..=opts.max_iter {
        let t = fixed_point_map(spec, tf, &q, rule)?;
        let residual = max_abs_diff(&q, &t);
        // relative to the size of T(q), so that a small field cannot make
        // q = 0 look converged
        let scale = t.iter().fold(opts.tol, |a, &v| a.max(v.abs())).min(1.0);
        if residual < opts.tol * scale {
            return finish(spec, tf, rule, q, residual, it);
        }
        if it == opts.max_iter {
            return Err(Error::NotConverged { iterations: it, residual, last: q });
        }
        let step: Vec<f64> = t.iter().zip(&q).map(|(a, b)| a - b).collect();
        if step.iter().zip(&last_step).any(|(a, b)| a * b < 0.0) {
            alpha = (alpha * 0.5).max(1e-6);
        }
        last_step = step;
        for (qs, ts) in q.iter_mut().zip(&t) {
            *qs = ((1.0 - alpha) * *qs + alpha * ts).clamp(0.0, 1.0);
        }
    }
    unreachable!("loop returns on its final iteration")
}

fn finish(
    spec: &ModelSpec,
    tf: TempField,
    rule: &QuadRule,
    q: Vec<f64>,
    residual: f64,
    iterations: usize,
) -> Result<RSSolution> {
    let q_vec = spec.contract(&q)?.per_species;
    let rs_value = rs_functional(spec, tf, &q, rule)?;
    let on_boundary = q.iter().map(|&v| v == 0.0 || v == 1.0).collect();
    Ok(RSSolution {
        candidates: vec![Candidate { q: q.clone(), rs_value }],
        q_star: q,
        q_vec,
        residual,
        iterations,
        converged: true,
        on_boundary,
        rs_value,
        unique: false,
    })
}

/// Standard starting points: the zero vector, the all-ones vector, and the
/// decoupled value `tanh^2(h)`.
pub fn standard_starts(m: usize, h: f64) -> Vec<Vec<f64>> {
    vec![vec![0.0; m], vec![1.0; m], vec![tanh2(h); m]]
}

/// Solves for the critical point from every standard start.
///
/// When uniqueness is guaranteed all converged starts must agree (disagreement
/// is an [`Error::InternalInconsistency`]). Outside it, every distinct limit is
/// recorded and the solution is the one with the smallest RS value.
pub fn solve_fixed_point(
    spec: &ModelSpec,
    tf: TempField,
    rule: &QuadRule,
    opts: &SolverOptions,
) -> Result<RSSolution> {
    let unique = uniqueness_guaranteed(spec, tf);
    let mut found: Vec<RSSolution> = Vec::new();
    let mut last_failure = None;
    for start in standard_starts(spec.species(), tf.h) {
        match iterate_from(spec, tf, rule, opts, &start) {
            Ok(sol) => {
                if !found.iter().any(|f| max_abs_diff(&f.q_star, &sol.q_star) < DISTINCT_TOL) {
                    found.push(sol);
                }
            }
            Err(e @ Error::NotConverged { .. }) => last_failure = Some(e),
            Err(e) => return Err(e),
        }
    }
    if found.is_empty() {
        return Err(last_failure.expect("at least one start was attempted"));
    }
    if unique && found.len() > 1 {
        return Err(Error::InternalInconsistency(format!(
            "uniqueness holds at beta = {}, h = {} but {} distinct limits were found: {:?}",
            tf.beta,
            tf.h,
            found.len(),
            found.iter().map(|f| &f.q_star).collect::<Vec<_>>()
        )));
    }
    let candidates: Vec<Candidate> = found.iter().flat_map(|f| f.candidates.clone()).collect();
    let best = found
        .into_iter()
        .min_by(|a, b| a.rs_value.total_cmp(&b.rs_value))
        .expect("non-empty");
    Ok(RSSolution { candidates, unique, ..best })
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ModelSpec {
        ModelSpec::two_species(1.5, 1.2, 0.6).unwrap()
    }

    #[test]
    fn threshold_values() {
        let sk = uniqueness_threshold(&ModelSpec::sk_reduction(0.5)).unwrap();
        assert_eq!(sk, 0.5);
        let r = uniqueness_threshold(&reference()).unwrap();
        let expected = 1.0 / (1.38 + (0.1764f64 + 0.96).sqrt());
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.40883).abs() < 1e-5);
        let thin = ModelSpec::two_species(2.0, 1.0, 0.999).unwrap();
        let lim = uniqueness_threshold(&thin).unwrap();
        assert!((lim - 1.0 / (2.0 * 0.999 * 2.0)).abs() < 1e-3);
        let three = ModelSpec::new(vec![vec![1.0; 3]; 3], vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(uniqueness_threshold(&three), Err(Error::Unsupported(_))));
    }

    #[test]
    fn high_temperature_limit() {
        let rule = QuadRule::default();
        let tf = TempField::new(1e-5, 0.3).unwrap();
        let v = rs_functional(&reference(), tf, &[0.2, 0.5], &rule).unwrap();
        assert!((v - std::f64::consts::LN_2 - log_cosh(0.3)).abs() < 1e-8);
    }

    #[test]
    fn gradient_vanishes_at_zero_without_field() {
        let rule = QuadRule::default();
        let tf = TempField::new(0.7, 0.0).unwrap();
        let g = rs_gradient(&reference(), tf, &[0.0, 0.0], &rule).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_field_below_threshold_gives_zero() {
        let spec = reference();
        let rule = QuadRule::default();
        let b0 = uniqueness_threshold(&spec).unwrap();
        let tf = TempField::new((0.8 * b0).sqrt(), 0.0).unwrap();
        let sol = solve_fixed_point(&spec, tf, &rule, &SolverOptions::default()).unwrap();
        assert!(sol.unique);
        assert!(sol.q_star.iter().all(|&q| q.abs() < 1e-9), "{:?}", sol.q_star);
    }

    #[test]
    fn decoupled_limit() {
        let rule = QuadRule::default();
        let tf = TempField::new(1e-4, 0.4).unwrap();
        let sol = solve_fixed_point(&reference(), tf, &rule, &SolverOptions::default()).unwrap();
        for q in &sol.q_star {
            assert!((q - tanh2(0.4)).abs() < 1e-6);
        }
        assert!((tanh2(0.4) - 0.144361).abs() < 1e-6);
    }

    #[test]
    fn positive_field_gives_interior_point() {
        let rule = QuadRule::default();
        let tf = TempField::new(0.9, 0.2).unwrap();
        let sol = solve_fixed_point(&reference(), tf, &rule, &SolverOptions::default()).unwrap();
        assert!(sol.unique);
        assert_eq!(sol.candidates.len(), 1);
        assert!(sol.q_star.iter().all(|&q| q > 0.0 && q < 1.0));
        assert!(sol.on_boundary.iter().all(|b| !b));
        let g = rs_gradient(&reference(), tf, &sol.q_star, &rule).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn low_temperature_zero_field_reports_candidates() {
        let spec = reference();
        let rule = QuadRule::default();
        let b0 = uniqueness_threshold(&spec).unwrap();
        let tf = TempField::new((2.0 * b0).sqrt(), 0.0).unwrap();
        let sol = solve_fixed_point(&spec, tf, &rule, &SolverOptions::default()).unwrap();
        assert!(!sol.unique);
        assert!(sol.candidates.len() >= 2, "{:?}", sol.candidates);
        let min = sol.candidates.iter().map(|c| c.rs_value).fold(f64::INFINITY, f64::min);
        assert_eq!(sol.rs_value, min);
    }

    #[test]
    fn not_converged_carries_last_iterate() {
        let rule = QuadRule::default();
        let tf = TempField::new(0.9, 0.3).unwrap();
        let opts = SolverOptions { max_iter: 2, ..SolverOptions::default() };
        match iterate_from(&reference(), tf, &rule, &opts, &[1.0, 1.0]) {
            Err(Error::NotConverged { last, iterations, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(last.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
