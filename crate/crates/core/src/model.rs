//! Model parameterization: species proportions, the block variance matrix,
//! and validation against the standing assumptions used by the thresholds.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Species count, variance matrix `delta2` (row-major `M x M`) and
/// proportions `lambda`. `lambda` is stored exactly as given; validation
/// reports, but never repairs, a sum different from one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    delta2: Vec<Vec<f64>>,
    lambda: Vec<f64>,
}

impl ModelSpec {
    pub fn new(delta2: Vec<Vec<f64>>, lambda: Vec<f64>) -> Result<Self> {
        let m = lambda.len();
        if m == 0 {
            return Err(Error::InvalidParams("at least one species is required".into()));
        }
        if delta2.len() != m {
            return Err(Error::BadDimension { expected: m, got: delta2.len() });
        }
        for row in &delta2 {
            if row.len() != m {
                return Err(Error::BadDimension { expected: m, got: row.len() });
            }
        }
        if delta2.iter().flatten().chain(&lambda).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite model parameter".into()));
        }
        Ok(Self { delta2, lambda })
    }

    /// Builds a spec from a row-major flattened `delta2`.
    pub fn from_row_major(m: usize, delta2: &[f64], lambda: Vec<f64>) -> Result<Self> {
        if delta2.len() != m * m {
            return Err(Error::BadDimension { expected: m * m, got: delta2.len() });
        }
        if lambda.len() != m {
            return Err(Error::BadDimension { expected: m, got: lambda.len() });
        }
        Self::new(delta2.chunks(m).map(<[f64]>::to_vec).collect(), lambda)
    }

    /// Two species with unit cross-variance.
    pub fn two_species(d11: f64, d22: f64, lambda1: f64) -> Result<Self> {
        Self::new(vec![vec![d11, 1.0], vec![1.0, d22]], vec![lambda1, 1.0 - lambda1])
    }

    /// Classical SK written as a two-species model (`delta2` all ones).
    pub fn sk_reduction(lambda1: f64) -> Self {
        Self::two_species(1.0, 1.0, lambda1).expect("finite parameters")
    }

    pub fn species(&self) -> usize {
        self.lambda.len()
    }

    pub fn delta2(&self) -> &[Vec<f64>] {
        &self.delta2
    }

    pub fn d2(&self, s: usize, t: usize) -> f64 {
        self.delta2[s][t]
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn delta2_row_major(&self) -> Vec<f64> {
        self.delta2.iter().flatten().copied().collect()
    }

    pub fn delta2_matrix(&self) -> DMatrix<f64> {
        let m = self.species();
        DMatrix::from_fn(m, m, |s, t| self.delta2[s][t])
    }

    pub fn is_sk_reduction(&self) -> bool {
        self.delta2.iter().flatten().all(|&v| v == 1.0)
    }

    /// Overlap contractions of a species vector `q`:
    /// `scalar = sum_{s,t} delta2_st lambda_s lambda_t q_s q_t` and
    /// `per_species_s = 2 sum_t delta2_st lambda_t q_t`.
    pub fn contract(&self, q: &[f64]) -> Result<Contraction> {
        let m = self.species();
        if q.len() != m {
            return Err(Error::BadDimension { expected: m, got: q.len() });
        }
        let per_species: Vec<f64> = (0..m)
            .map(|s| 2.0 * (0..m).map(|t| self.delta2[s][t] * self.lambda[t] * q[t]).sum::<f64>())
            .collect();
        let scalar = (0..m)
            .map(|s| {
                (0..m)
                    .map(|t| self.delta2[s][t] * self.lambda[s] * self.lambda[t] * q[s] * q[t])
                    .sum::<f64>()
            })
            .sum();
        Ok(Contraction { scalar, per_species })
    }

    /// The matrix `A` with `Q^s = (A q)_s`: `A_st = 2 delta2_st lambda_t`.
    pub fn contraction_matrix(&self) -> DMatrix<f64> {
        let m = self.species();
        DMatrix::from_fn(m, m, |s, t| 2.0 * self.delta2[s][t] * self.lambda[t])
    }

    /// Contraction at `q = 1`, the top level of every Parisi hierarchy.
    pub fn full_contraction(&self) -> Contraction {
        self.contract(&vec![1.0; self.species()]).expect("dimension matches")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub scalar: f64,
    pub per_species: Vec<f64>,
}

/// A point in the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempField {
    pub beta: f64,
    pub h: f64,
}

impl TempField {
    pub fn new(beta: f64, h: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
        }
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::InvalidParams(format!("h must be nonnegative, got {h}")));
        }
        Ok(Self { beta, h })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    /// Positive semidefinite `delta2`: the variational formula holds.
    Convex,
    /// `M = 2`, unit cross-variance, `d11 d22 > 1`, `lambda1 d11 >= lambda2 d22`.
    TwoSpeciesStandard,
    /// Everything passes; downstream results are tagged non-rigorous.
    Unchecked,
}

impl std::str::FromStr for ValidationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convex" => Ok(Self::Convex),
            "two-species-standard" => Ok(Self::TwoSpeciesStandard),
            "unchecked" => Ok(Self::Unchecked),
            other => Err(Error::InvalidParams(format!("unknown validation mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub checks: Vec<Check>,
    /// `delta2` is all ones: the classical model in two-species form.
    pub sk_reduction: bool,
    /// False only in unchecked mode.
    pub rigorous: bool,
}

impl ValidationReport {
    /// Every check demanded by the mode passed. Unchecked mode always passes.
    pub fn passed(&self) -> bool {
        self.mode == ValidationMode::Unchecked || self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

const SYMMETRY_TOL: f64 = 1e-14;
const LAMBDA_SUM_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-12;

/// Checks the model against `mode`. Failures are report entries, never errors.
/// Two-species-standard includes every convex check.
pub fn validate(spec: &ModelSpec, mode: ValidationMode) -> ValidationReport {
    let m = spec.species();
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check { name: name.to_string(), passed, detail })
    };

    let asym = (0..m)
        .flat_map(|s| (0..m).map(move |t| (s, t)))
        .map(|(s, t)| (spec.d2(s, t) - spec.d2(t, s)).abs())
        .fold(0.0, f64::max);
    push("symmetric", asym <= SYMMETRY_TOL, format!("max |d_st - d_ts| = {asym:e}"));

    let lambda_sum: f64 = spec.lambda().iter().sum();
    push(
        "lambda-sum",
        (lambda_sum - 1.0).abs() <= LAMBDA_SUM_TOL,
        format!("sum lambda = {lambda_sum}"),
    );
    let in_range = spec.lambda().iter().all(|&l| l > 0.0 && l < 1.0);
    push("lambda-range", in_range, format!("lambda = {:?}", spec.lambda()));

    let nonneg = spec.delta2().iter().flatten().all(|&v| v >= 0.0);
    push("nonnegative-entries", nonneg, "all delta2_st >= 0".into());

    let min_eig = min_eigenvalue(spec);
    push("positive-semidefinite", min_eig >= PSD_TOL, format!("smallest eigenvalue {min_eig}"));

    if mode == ValidationMode::TwoSpeciesStandard {
        push("two-species", m == 2, format!("M = {m}"));
        if m == 2 {
            let (d11, d22, d12, d21) = (spec.d2(0, 0), spec.d2(1, 1), spec.d2(0, 1), spec.d2(1, 0));
            push(
                "unit-cross-variance",
                d12 == 1.0 && d21 == 1.0,
                format!("delta2_12 = {d12}, delta2_21 = {d21}"),
            );
            push("diagonal-product", d11 * d22 > 1.0, format!("d11 d22 = {}", d11 * d22));
            let (a, b) = (spec.lambda()[0] * d11, spec.lambda()[1] * d22);
            push("species-order", a >= b, format!("lambda1 d11 = {a}, lambda2 d22 = {b}"));
        }
    }

    ValidationReport {
        mode,
        checks,
        sk_reduction: spec.is_sk_reduction(),
        rigorous: mode != ValidationMode::Unchecked,
    }
}

fn min_eigenvalue(spec: &ModelSpec) -> f64 {
    let d = spec.delta2_matrix();
    let sym = (&d + d.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> ModelSpec {
        ModelSpec::two_species(1.5, 1.2, 0.6).unwrap()
    }

    #[test]
    fn reference_spec_is_two_species_standard() {
        let r = validate(&reference(), ValidationMode::TwoSpeciesStandard);
        assert!(r.passed(), "{:?}", r.failures());
        assert!(r.rigorous);
        assert!(!r.sk_reduction);
    }

    #[test]
    fn bipartite_fails_convex_but_passes_unchecked() {
        let spec = ModelSpec::two_species(0.0, 0.0, 0.5).unwrap();
        let r = validate(&spec, ValidationMode::Convex);
        assert!(!r.passed());
        assert!(!r.check("positive-semidefinite").unwrap().passed);
        let u = validate(&spec, ValidationMode::Unchecked);
        assert!(u.passed());
        assert!(!u.rigorous);
    }

    #[test]
    fn sk_reduction_is_convex_but_not_standard() {
        let spec = ModelSpec::sk_reduction(0.5);
        assert!(validate(&spec, ValidationMode::Convex).passed());
        let r = validate(&spec, ValidationMode::TwoSpeciesStandard);
        assert!(!r.passed());
        assert!(!r.check("diagonal-product").unwrap().passed);
        assert!(r.sk_reduction);
    }

    #[test]
    fn lambda_is_not_renormalized() {
        let spec = ModelSpec::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], vec![0.5, 0.6]).unwrap();
        assert_eq!(spec.lambda(), &[0.5, 0.6]);
        let r = validate(&spec, ValidationMode::Convex);
        assert!(!r.check("lambda-sum").unwrap().passed);
    }

    #[test]
    fn asymmetric_and_misordered_specs_fail() {
        let spec = ModelSpec::new(vec![vec![2.0, 1.0], vec![0.9, 2.0]], vec![0.5, 0.5]).unwrap();
        assert!(!validate(&spec, ValidationMode::Convex).check("symmetric").unwrap().passed);
        let swapped = ModelSpec::two_species(1.2, 1.5, 0.4).unwrap();
        let r = validate(&swapped, ValidationMode::TwoSpeciesStandard);
        assert!(!r.check("species-order").unwrap().passed);
        let three = ModelSpec::new(vec![vec![1.0; 3]; 3], vec![0.3, 0.3, 0.4]).unwrap();
        assert!(!validate(&three, ValidationMode::TwoSpeciesStandard).passed());
        assert!(validate(&three, ValidationMode::Convex).passed());
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            ModelSpec::new(vec![vec![1.0, 1.0]], vec![0.5, 0.5]),
            Err(Error::BadDimension { .. })
        ));
        assert!(matches!(
            reference().contract(&[0.1, 0.2, 0.3]),
            Err(Error::BadDimension { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn contraction_examples() {
        let z = reference().contract(&[0.0, 0.0]).unwrap();
        assert_eq!(z.scalar, 0.0);
        assert_eq!(z.per_species, vec![0.0, 0.0]);

        let sk = ModelSpec::sk_reduction(0.5).full_contraction();
        assert!((sk.scalar - 1.0).abs() < 1e-15);
        assert!((sk.per_species[0] - 2.0).abs() < 1e-15);
        assert!((sk.per_species[1] - 2.0).abs() < 1e-15);

        let c = reference().contract(&[0.3, 0.7]).unwrap();
        // 2 (1.5*0.6*0.3 + 1*0.4*0.7), 2 (1*0.6*0.3 + 1.2*0.4*0.7)
        assert!((c.per_species[0] - 1.10).abs() < 1e-14);
        assert!((c.per_species[1] - 1.032).abs() < 1e-14);
        let a = reference().contraction_matrix();
        let via_matrix = &a * nalgebra::DVector::from_vec(vec![0.3, 0.7]);
        assert!((via_matrix[0] - 1.10).abs() < 1e-14);
        assert!((via_matrix[1] - 1.032).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn scalar_is_half_weighted_inner_product(q1 in 0.0..=1.0f64, q2 in 0.0..=1.0f64,
                                                 d11 in 0.0..4.0f64, d22 in 0.0..4.0f64,
                                                 d12 in 0.0..2.0f64, l in 0.01..0.99f64) {
            let spec = ModelSpec::new(vec![vec![d11, d12], vec![d12, d22]], vec![l, 1.0 - l]).unwrap();
            let c = spec.contract(&[q1, q2]).unwrap();
            let half: f64 = 0.5 * (l * q1 * c.per_species[0] + (1.0 - l) * q2 * c.per_species[1]);
            prop_assert!((c.scalar - half).abs() < 1e-14);
        }

        #[test]
        fn contraction_is_monotone(q1 in 0.0..=1.0f64, q2 in 0.0..=1.0f64,
                                   e1 in 0.0..=1.0f64, e2 in 0.0..=1.0f64,
                                   d11 in 0.0..4.0f64, d22 in 0.0..4.0f64, d12 in 0.0..2.0f64) {
            let spec = ModelSpec::new(vec![vec![d11, d12], vec![d12, d22]], vec![0.3, 0.7]).unwrap();
            let lo = spec.contract(&[q1 * e1, q2 * e2]).unwrap();
            let hi = spec.contract(&[q1, q2]).unwrap();
            for s in 0..2 {
                prop_assert!(lo.per_species[s] <= hi.per_species[s] + 1e-15);
            }
        }
    }
}
