//! Overflow-safe hyperbolic helpers shared by every integrand.

/// Arguments of `exp`/`cosh` are clamped to this magnitude before exponentiation.
pub const EXP_CLAMP: f64 = 700.0;

#[inline]
pub fn clamp_arg(y: f64) -> f64 {
    y.clamp(-EXP_CLAMP, EXP_CLAMP)
}

/// `log cosh y` computed as `|y| + log(1 + e^{-2|y|}) - log 2`.
#[inline]
pub fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[inline]
pub fn cosh(y: f64) -> f64 {
    clamp_arg(y).cosh()
}

#[inline]
pub fn sech(y: f64) -> f64 {
    let e = (-y.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

#[inline]
pub fn tanh2(y: f64) -> f64 {
    let t = y.tanh();
    t * t
}

#[inline]
pub fn sech4(y: f64) -> f64 {
    let s = sech(y);
    let s2 = s * s;
    s2 * s2
}

/// Second derivative of `tanh^2`: `2 (1 - 2 sinh^2 y) / cosh^4 y`.
#[inline]
pub fn tanh2_second_derivative(y: f64) -> f64 {
    let s = sech(y);
    let t = y.tanh();
    // sinh^2 / cosh^4 = tanh^2 sech^2
    2.0 * (s * s * s * s - 2.0 * t * t * s * s)
}

/// `log(sum_i w_i exp(a_i))` with the largest exponent factored out.
pub fn log_weighted_sum_exp(weights: &[f64], exponents: &[f64]) -> f64 {
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = weights
        .iter()
        .zip(exponents)
        .map(|(w, a)| w * (a - max).exp())
        .sum();
    max + sum.ln()
}
