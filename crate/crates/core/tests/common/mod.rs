//! Independent reference computations: composite trapezoid and Monte Carlo
//! Gaussian integrals, a bisection solver for the two-species fixed point,
//! and the closed single-species formulas. None of them touch the library's
//! quadrature or solver.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `E f(eta)` by the composite trapezoid rule on `[-12, 12]`.
pub fn trapezoid(f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi, n) = (-12.0, 12.0, 6_000);
    let dx = (hi - lo) / n as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = 0.0;
    for k in 0..=n {
        let x = lo + dx * k as f64;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += w * f(x) * (-0.5 * x * x).exp();
    }
    acc * dx * norm
}

/// Mean and standard error of `f(eta)` over `n` samples.
pub fn monte_carlo(f: impl Fn(f64) -> f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..n {
        let v = f(rng.sample(StandardNormal));
        sum += v;
        sq += v * v;
    }
    let mean = sum / n as f64;
    let var = (sq / n as f64 - mean * mean).max(0.0);
    (mean, (var / n as f64).sqrt())
}

/// Mean and standard error of `g(eta1, eta2)` over `n` pairs.
pub fn monte_carlo2(g: impl Fn(f64, f64) -> f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let v = g(a, b);
        sum += v;
        sq += v * v;
    }
    let mean = sum / n as f64;
    let var = (sq / n as f64 - mean * mean).max(0.0);
    (mean, (var / n as f64).sqrt())
}

pub fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Two-species model in plain arrays.
#[derive(Clone, Copy, Debug)]
pub struct Two {
    pub d: [[f64; 2]; 2],
    pub l: [f64; 2],
}

impl Two {
    pub const REFERENCE: Two = Two { d: [[1.5, 1.0], [1.0, 1.2]], l: [0.6, 0.4] };

    /// `Q_s = 2 sum_t delta2_st lambda_t q_t`.
    pub fn big_q(&self, q: [f64; 2]) -> [f64; 2] {
        let f = |s: usize| 2.0 * (self.d[s][0] * self.l[0] * q[0] + self.d[s][1] * self.l[1] * q[1]);
        [f(0), f(1)]
    }

    pub fn scalar(&self, q: [f64; 2]) -> f64 {
        let mut acc = 0.0;
        for s in 0..2 {
            for t in 0..2 {
                acc += self.d[s][t] * self.l[s] * self.l[t] * q[s] * q[t];
            }
        }
        acc
    }

    pub fn tanh2_mean(&self, beta: f64, h: f64, big_q: f64) -> f64 {
        trapezoid(|x| (beta * big_q.sqrt() * x + h).tanh().powi(2))
    }

    /// The RS functional written out directly.
    pub fn rs(&self, beta: f64, h: f64, q: [f64; 2]) -> f64 {
        let qq = self.big_q(q);
        let q2 = self.big_q([1.0, 1.0]);
        let b2 = beta * beta;
        let mut v = std::f64::consts::LN_2;
        for s in 0..2 {
            let e = trapezoid(|x| log_cosh(beta * qq[s].sqrt() * x + h));
            v += self.l[s] * (e + 0.5 * b2 * (q2[s] - qq[s]));
        }
        v - 0.5 * b2 * (self.scalar([1.0, 1.0]) - self.scalar(q))
    }

    /// Fixed point by nested bisection: for each `q1` the inner equation
    /// `q2 = T_2(q1, q2)` is bisected, then `q1 - T_1(q1, q2(q1))` is.
    pub fn fixed_point(&self, beta: f64, h: f64) -> [f64; 2] {
        let inner = |q1: f64| {
            bisect(0.0, 1.0, |q2| self.tanh2_mean(beta, h, self.big_q([q1, q2])[1]) - q2)
        };
        let q1 = bisect(0.0, 1.0, |q1| {
            let q2 = inner(q1);
            self.tanh2_mean(beta, h, self.big_q([q1, q2])[0]) - q1
        });
        [q1, inner(q1)]
    }
}

/// Root of a function positive at `lo` and negative at `hi`.
pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    if flo <= 0.0 {
        return lo;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Single-species SK with covariance `beta^2 N R^2`:
/// `log 2 + E log cosh(beta sqrt(2q) eta + h) + beta^2/2 (1 - q)^2`.
pub fn sk_rs(beta: f64, h: f64, q: f64) -> f64 {
    std::f64::consts::LN_2
        + trapezoid(|x| log_cosh(beta * (2.0 * q).sqrt() * x + h))
        + 0.5 * beta * beta * (1.0 - q).powi(2)
}

pub fn sk_fixed_point(beta: f64, h: f64) -> f64 {
    bisect(0.0, 1.0, |q| trapezoid(|x| (beta * (2.0 * q).sqrt() * x + h).tanh().powi(2)) - q)
}

/// Classical AT condition `2 beta^2 E sech^4(beta sqrt(2 q) eta + h) = 1`,
/// solved for `beta` at fixed `h`.
pub fn sk_at_beta(h: f64) -> f64 {
    let g = |beta: f64| {
        let q = sk_fixed_point(beta, h);
        1.0 - 2.0 * beta * beta * trapezoid(|x| (beta * (2.0 * q).sqrt() * x + h).cosh().powi(-4))
    };
    bisect(0.05, 3.0, g)
}
