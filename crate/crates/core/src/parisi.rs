//! The `k`-level Parisi functional, evaluated directly from its backward
//! recursion. This is deliberately the slow, generic route: the RS and 1RSB
//! closed forms elsewhere in the crate are checked against it.
//!
//! Cost is `order^(k+2)` integrand evaluations per species; `k <= 3` is
//! practical with a modest rule (order 15 at `k = 3` is under a million
//! evaluations per species).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, TempField};
use crate::quadrature::QuadRule;
use crate::special::log_cosh;

/// Increments more negative than this are an error; smaller ones are clamped.
const INCREMENT_TOL: f64 = 1e-12;

/// Parameters of a `k`-level functional: `zeta` has `k` entries strictly
/// inside `(0, 1)`, `q` is `M x (k + 1)` with nondecreasing rows in `[0, 1]`.
/// The boundary levels `zeta_0 = 0`, `zeta_{k+1} = 1`, `q_0 = 0`,
/// `q_{k+2} = 1` are implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParisiParams {
    zeta: Vec<f64>,
    q: Vec<Vec<f64>>,
}

impl ParisiParams {
    pub fn new(zeta: Vec<f64>, q: Vec<Vec<f64>>) -> Result<Self> {
        let k = zeta.len();
        if zeta.iter().any(|&z| !(z > 0.0 && z < 1.0)) {
            return Err(Error::InvalidParams(format!("zeta entries must lie in (0, 1): {zeta:?}")));
        }
        if zeta.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams(format!("zeta must be strictly increasing: {zeta:?}")));
        }
        for row in &q {
            if row.len() != k + 1 {
                return Err(Error::BadDimension { expected: k + 1, got: row.len() });
            }
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) || row.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidParams(format!(
                    "overlap rows must be nondecreasing in [0, 1]: {row:?}"
                )));
            }
        }
        Ok(Self { zeta, q })
    }

    /// `k = 0`: one overlap per species.
    pub fn replica_symmetric(q: &[f64]) -> Result<Self> {
        Self::new(Vec::new(), q.iter().map(|&v| vec![v]).collect())
    }

    /// `k = 1` with inner overlap `q`, outer overlap `p` and weight `zeta`.
    pub fn one_step(q: &[f64], p: &[f64], zeta: f64) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::BadDimension { expected: q.len(), got: p.len() });
        }
        Self::new(vec![zeta], q.iter().zip(p).map(|(&a, &b)| vec![a, b]).collect())
    }

    pub fn levels(&self) -> usize {
        self.zeta.len()
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn q(&self) -> &[Vec<f64>] {
        &self.q
    }
}

/// `log 2 + sum_s lambda_s X0_s - beta^2/2 sum_{l=1}^{k+1} zeta_l (Q_{l+1} - Q_l)`.
pub fn evaluate(spec: &ModelSpec, tf: TempField, p: &ParisiParams, rule: &QuadRule) -> Result<f64> {
    let m = spec.species();
    if p.q.len() != m {
        return Err(Error::BadDimension { expected: m, got: p.q.len() });
    }
    let k = p.levels();
    // overlap vectors q_0 .. q_{k+2}
    let mut overlaps = vec![vec![0.0; m]];
    for l in 0..=k {
        overlaps.push(p.q.iter().map(|row| row[l]).collect());
    }
    overlaps.push(vec![1.0; m]);
    let contractions = overlaps
        .iter()
        .map(|q| spec.contract(q))
        .collect::<Result<Vec<_>>>()?;

    // zeta_1 .. zeta_{k+1}
    let mut zetas = p.zeta.clone();
    zetas.push(1.0);

    let b2 = tf.beta * tf.beta;
    let mut value = std::f64::consts::LN_2;
    for (s, &lambda) in spec.lambda().iter().enumerate() {
        let mut spreads = Vec::with_capacity(k + 2);
        for l in 1..=k + 2 {
            let inc = contractions[l].per_species[s] - contractions[l - 1].per_species[s];
            if inc < -INCREMENT_TOL {
                return Err(Error::NonmonotoneOverlap { species: s, increment: inc });
            }
            spreads.push(tf.beta * inc.max(0.0).sqrt());
        }
        let rec = Recursion { rule, spreads: &spreads, zetas: &zetas };
        value += lambda * rec.root(tf.h);
    }
    for l in 1..=k + 1 {
        value -= 0.5 * b2 * zetas[l - 1] * (contractions[l + 1].scalar - contractions[l].scalar);
    }
    if !value.is_finite() {
        return Err(Error::Overflow(format!("Parisi functional is not finite: {value}")));
    }
    Ok(value)
}

struct Recursion<'a> {
    rule: &'a QuadRule,
    /// `beta sqrt(Q_l - Q_{l-1})` for `l = 1 .. k + 2`.
    spreads: &'a [f64],
    /// `zeta_1 .. zeta_{k+1}`.
    zetas: &'a [f64],
}

impl Recursion<'_> {
    fn depth(&self) -> usize {
        self.spreads.len()
    }

    /// `X_0 = E_1 X_1(h + spread_1 eta_1)`.
    fn root(&self, h: f64) -> f64 {
        let spread = self.spreads[0];
        if spread == 0.0 {
            return self.level(1, h);
        }
        self.rule.iter().map(|(x, w)| w * self.level(1, h + spread * x)).sum()
    }

    /// `X_l(y) = (1/zeta_l) log E exp(zeta_l X_{l+1}(y + spread_{l+1} eta))`.
    fn level(&self, l: usize, y: f64) -> f64 {
        if l == self.depth() {
            return log_cosh(y);
        }
        let spread = self.spreads[l];
        if spread == 0.0 {
            return self.level(l + 1, y);
        }
        let zeta = self.zetas[l - 1];
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for (x, w) in self.rule.iter() {
            let a = zeta * self.level(l + 1, y + spread * x);
            if a > max {
                sum = sum * (max - a).exp() + w;
                max = a;
            } else {
                sum += w * (a - max).exp();
            }
        }
        (max + sum.ln()) / zeta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ModelSpec {
        ModelSpec::two_species(1.5, 1.2, 0.6).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ParisiParams::new(vec![0.0], vec![vec![0.1, 0.2]]).is_err());
        assert!(ParisiParams::new(vec![1.0], vec![vec![0.1, 0.2]]).is_err());
        assert!(ParisiParams::new(vec![0.6, 0.4], vec![vec![0.1, 0.2, 0.3]]).is_err());
        assert!(ParisiParams::new(vec![0.5], vec![vec![0.3, 0.2]]).is_err());
        assert!(ParisiParams::new(vec![0.5], vec![vec![0.3, 1.2]]).is_err());
        assert!(matches!(
            ParisiParams::new(vec![0.5], vec![vec![0.3]]),
            Err(Error::BadDimension { .. })
        ));
        assert_eq!(ParisiParams::one_step(&[0.1], &[0.2], 0.5).unwrap().levels(), 1);
    }

    #[test]
    fn high_temperature_limit() {
        let rule = QuadRule::default();
        let tf = TempField::new(1e-4, 0.7).unwrap();
        let p = ParisiParams::one_step(&[0.2, 0.3], &[0.5, 0.6], 0.4).unwrap();
        let v = evaluate(&reference(), tf, &p, &rule).unwrap();
        assert!((v - std::f64::consts::LN_2 - log_cosh(0.7)).abs() < 1e-6);
    }

    #[test]
    fn coalesced_levels_are_inert() {
        let rule = QuadRule::gauss_hermite(21).unwrap();
        let tf = TempField::new(0.8, 0.3).unwrap();
        let spec = reference();
        let two = ParisiParams::new(vec![0.3, 0.7], vec![vec![0.2, 0.5, 0.5], vec![0.1, 0.4, 0.4]]).unwrap();
        let one = ParisiParams::new(vec![0.3], vec![vec![0.2, 0.5], vec![0.1, 0.4]]).unwrap();
        let a = evaluate(&spec, tf, &two, &rule).unwrap();
        let b = evaluate(&spec, tf, &one, &rule).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        // merging the bottom level instead makes zeta_1 inert
        let low = ParisiParams::new(vec![0.3, 0.7], vec![vec![0.2, 0.2, 0.5], vec![0.1, 0.1, 0.4]]).unwrap();
        let one_hi = ParisiParams::new(vec![0.7], vec![vec![0.2, 0.5], vec![0.1, 0.4]]).unwrap();
        let c = evaluate(&spec, tf, &low, &rule).unwrap();
        let d = evaluate(&spec, tf, &one_hi, &rule).unwrap();
        assert!((c - d).abs() < 1e-9, "{c} vs {d}");
    }

    #[test]
    fn three_levels_evaluate() {
        let rule = QuadRule::gauss_hermite(11).unwrap();
        let tf = TempField::new(0.7, 0.2).unwrap();
        let p = ParisiParams::new(
            vec![0.2, 0.5, 0.8],
            vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.05, 0.15, 0.25, 0.35]],
        )
        .unwrap();
        let v = evaluate(&reference(), tf, &p, &rule).unwrap();
        assert!(v.is_finite());
        // coalescing all levels reproduces the k = 0 value
        let flat = ParisiParams::new(
            vec![0.2, 0.5, 0.8],
            vec![vec![0.3; 4], vec![0.25; 4]],
        )
        .unwrap();
        let rs = ParisiParams::replica_symmetric(&[0.3, 0.25]).unwrap();
        let a = evaluate(&reference(), tf, &flat, &rule).unwrap();
        let b = evaluate(&reference(), tf, &rs, &rule).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn negative_increment_is_reported() {
        // a negative cross-variance makes Q_s decrease although q increases
        let spec = ModelSpec::new(vec![vec![1.0, -2.0], vec![-2.0, 1.0]], vec![0.5, 0.5]).unwrap();
        let rule = QuadRule::gauss_hermite(5).unwrap();
        let tf = TempField::new(0.5, 0.1).unwrap();
        let p = ParisiParams::one_step(&[0.0, 0.1], &[0.0, 0.9], 0.5).unwrap();
        assert!(matches!(
            evaluate(&spec, tf, &p, &rule),
            Err(Error::NonmonotoneOverlap { species: 0, .. })
        ));
    }
}
