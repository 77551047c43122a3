//! Gaussian expectations by Gauss–Hermite quadrature.
//!
//! Every expectation in this crate has the shape `E f(beta * eta * scale + shift)`
//! with `eta ~ N(0, 1)`, or a two-level version of it where an inner Gaussian is
//! integrated inside a logarithm. [`QuadRule`] stores Gauss–Hermite nodes already
//! rescaled to the standard normal density, so a plain weighted sum is an
//! expectation.
//!
//! Gauss–Hermite converges spectrally for entire integrands of moderate growth
//! (`cosh`, `exp`, polynomials). Integrands built from `tanh` or `sech` have
//! poles at distance `pi / (2 beta scale)` from the real axis and converge
//! only like `exp(-c sqrt(order))`; keep `beta * scale` of order one, or raise
//! the order, when those matter.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::special::{self, log_weighted_sum_exp};

pub const DEFAULT_ORDER: usize = 61;

/// Nodes and weights for `E f(eta)`, `eta ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule {
    /// Gauss–Hermite rule with `order` nodes, transformed to the standard
    /// normal weight and normalized so the weights sum to one.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParams("quadrature order must be positive".into()));
        }
        let (x, w) = physicists_hermite(order);
        let total: f64 = w.iter().sum();
        let nodes = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
        let weights = w.iter().map(|v| v / total).collect();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `sum_i w_i f(beta * node_i * scale + shift)`.
    pub fn expect(&self, arg: GaussianArg, f: impl Fn(f64) -> f64) -> Result<f64> {
        let spread = arg.beta * arg.scale;
        let mut acc = 0.0;
        for (x, w) in self.iter() {
            let y = spread * x + arg.shift;
            let v = f(y);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { node: x, argument: y });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

impl Default for QuadRule {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_ORDER).expect("default order is positive")
    }
}

/// The composite argument `beta * eta * scale + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianArg {
    pub scale: f64,
    pub shift: f64,
    pub beta: f64,
}

impl GaussianArg {
    pub fn new(beta: f64, scale: f64, shift: f64) -> Self {
        debug_assert!(scale >= 0.0, "scale must be nonnegative");
        Self { scale, shift, beta }
    }
}

/// Free-function form of [`QuadRule::expect`].
pub fn expect(rule: &QuadRule, arg: GaussianArg, f: impl Fn(f64) -> f64) -> Result<f64> {
    rule.expect(arg, f)
}

/// Closed form of `E cosh(sigma * eta + h) = exp(sigma^2 / 2) cosh h`.
pub fn expect_cosh_closed(sigma: f64, h: f64) -> Result<f64> {
    let exponent = 0.5 * sigma * sigma + h.abs();
    // exp(exponent) * (1 + e^{-2|h|}) / 2
    let log_value = exponent - std::f64::consts::LN_2 + (-2.0 * h.abs()).exp().ln_1p();
    if log_value >= f64::MAX.ln() {
        return Err(Error::Overflow(format!(
            "exp(sigma^2/2) cosh(h) with sigma = {sigma}, h = {h}"
        )));
    }
    Ok(log_value.exp())
}

/// Two-level expectation with an outer logarithm:
/// `(1/zeta) sum_i w1_i log( sum_j w2_j f(beta (node2_j * inner + node1_i * outer) + h)^zeta )`.
///
/// `f` must be positive; the power is taken as `exp(zeta * log f)`.
#[allow(clippy::too_many_arguments)]
pub fn nested_expect(
    outer_rule: &QuadRule,
    inner_rule: &QuadRule,
    inner_scale: f64,
    outer_scale: f64,
    h: f64,
    beta: f64,
    zeta: f64,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    nested_expect_log(outer_rule, inner_rule, inner_scale, outer_scale, h, beta, zeta, |y| {
        f(y).ln()
    })
}

/// [`nested_expect`] taking `log f` directly, so `f = cosh` can be supplied as
/// a stable `log cosh` without ever forming `cosh` itself.
#[allow(clippy::too_many_arguments)]
pub fn nested_expect_log(
    outer_rule: &QuadRule,
    inner_rule: &QuadRule,
    inner_scale: f64,
    outer_scale: f64,
    h: f64,
    beta: f64,
    zeta: f64,
    log_f: impl Fn(f64) -> f64,
) -> Result<f64> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::BadZeta(zeta));
    }
    let inner_spread = beta * inner_scale;
    let outer_spread = beta * outer_scale;
    let mut exponents = vec![0.0; inner_rule.order()];
    let mut acc = 0.0;
    for (x1, w1) in outer_rule.iter() {
        let y1 = outer_spread * x1 + h;
        let log_inner = if inner_spread == 0.0 {
            // inner Gaussian is degenerate: E_2 f^zeta = f(y1)^zeta
            zeta * checked_log(&log_f, x1, y1)?
        } else {
            for (slot, x2) in exponents.iter_mut().zip(inner_rule.nodes()) {
                let y = inner_spread * x2 + y1;
                *slot = zeta * checked_log(&log_f, *x2, y)?;
            }
            log_weighted_sum_exp(inner_rule.weights(), &exponents)
        };
        if !log_inner.is_finite() {
            return Err(Error::LogDomain { value: log_inner.exp() });
        }
        acc += w1 * log_inner;
    }
    Ok(acc / zeta)
}

fn checked_log(log_f: &impl Fn(f64) -> f64, node: f64, y: f64) -> Result<f64> {
    let v = log_f(y);
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::NonFiniteIntegrand { node, argument: y });
    }
    if v == f64::NEG_INFINITY {
        return Err(Error::LogDomain { value: 0.0 });
    }
    Ok(v)
}

/// `E cosh(beta * eta * scale + shift)` by quadrature with overflow clamping.
pub fn expect_cosh(rule: &QuadRule, arg: GaussianArg) -> Result<f64> {
    rule.expect(arg, special::cosh)
}

/// Physicists' Gauss–Hermite nodes/weights for weight `e^{-x^2}`. Nodes start
/// from the eigenvalues of the Jacobi matrix and are polished by Newton
/// iteration on the orthonormal Hermite recurrence, which also gives the
/// weights. Nodes far enough out that the recurrence overflows carry weights
/// below the smallest double and are given weight zero.
fn physicists_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^{-1/4}
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(|a, b| b.total_cmp(a));
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = guesses[i];
        for _ in 0..100 {
            let (p1, p2) = hermite_orthonormal(n, z, PIM4);
            let step = p1 / ((2.0 * nf).sqrt() * p2);
            if !step.is_finite() {
                break;
            }
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, p2) = hermite_orthonormal(n, z, PIM4);
        let pp = (2.0 * nf).sqrt() * p2;
        let wi = 2.0 / (pp * pp);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = if wi.is_finite() { wi } else { 0.0 };
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Returns `(h_n(z), h_{n-1}(z))` for the orthonormal Hermite functions
/// without the Gaussian factor.
fn hermite_orthonormal(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, p2)
}
