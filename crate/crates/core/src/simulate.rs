//! Finite-`N` systems: exact enumeration of the partition function for
//! small `N` and Metropolis sampling of species overlaps.
//!
//! # Disorder generator
//!
//! Couplings are a pure function of `(seed, i, j)`, so any instance can be
//! regenerated exactly without storing it. With `mix` the splitmix64
//! finalizer (`x += 0x9E3779B97F4A7C15`, then xor-shift-multiply by
//! `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB` with shifts 30, 27, 31,
//! all arithmetic wrapping):
//!
//! ```text
//! base = mix(mix(mix(seed) ^ i) ^ j)
//! b1 = mix(base), b2 = mix(b1)
//! u_k = ((b_k >> 11) + 0.5) * 2^-53
//! z = sqrt(-2 ln u1) cos(2 pi u2)
//! g_ij = sqrt(delta2[s(i)][s(j)]) * z
//! ```
//!
//! `g_ij` and `g_ji` are independent draws. Disorder sample `k` of a run
//! with seed `s` uses seed `mix(s ^ mix(k))`.
//!
//! # Boltzmann weight
//!
//! `H(sigma) = beta/sqrt(N) sum_{i,j} g_ij s_i s_j + h sum_i s_i` already
//! carries `beta`. The default weight is `exp(H)`, the convention under
//! which `log Z / N` converges to the variational formulas of this crate;
//! [`BoltzmannWeight::BetaTimesHamiltonian`] uses `exp(beta H)` instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, TempField};

/// Largest `N` accepted by exact enumeration.
pub const MAX_EXACT_N: usize = 24;

/// Largest `N` accepted by the overlap sampler.
pub const MAX_MC_N: usize = 256;

/// The splitmix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal keyed by `(seed, i, j)`.
pub fn counter_normal(seed: u64, i: u64, j: u64) -> f64 {
    let base = splitmix64(splitmix64(splitmix64(seed) ^ i) ^ j);
    let b1 = splitmix64(base);
    let b2 = splitmix64(b1);
    let (u1, u2) = (unit_open(b1), unit_open(b2));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Seed of the `k`-th disorder sample of a run.
pub fn disorder_seed(seed: u64, k: u64) -> u64 {
    splitmix64(seed ^ splitmix64(k))
}

/// Contiguous species blocks with boundaries `round(N * cumsum(lambda))`.
pub fn species_blocks(spec: &ModelSpec, n: usize) -> Vec<usize> {
    let mut index = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut start = 0;
    for (s, &l) in spec.lambda().iter().enumerate() {
        cum += l;
        let end = if s + 1 == spec.species() { n } else { ((cum * n as f64).round() as usize).min(n) };
        index.extend(std::iter::repeat(s).take(end.saturating_sub(start)));
        start = start.max(end);
    }
    index
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSample {
    pub seed: u64,
    pub n: usize,
    /// Row-major `N x N`.
    pub g: Vec<f64>,
    pub species_index: Vec<usize>,
}

impl DisorderSample {
    pub fn generate(spec: &ModelSpec, n: usize, seed: u64) -> Self {
        let species_index = species_blocks(spec, n);
        let sd: Vec<Vec<f64>> = spec.delta2().iter().map(|r| r.iter().map(|v| v.max(0.0).sqrt()).collect()).collect();
        let mut g = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                g.push(sd[species_index[i]][species_index[j]] * counter_normal(seed, i as u64, j as u64));
            }
        }
        Self { seed, n, g, species_index }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n + j]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinConfig {
    pub sigma: Vec<i8>,
    pub species_index: Vec<usize>,
}

impl SpinConfig {
    pub fn new(sigma: Vec<i8>, species_index: Vec<usize>) -> Result<Self> {
        if sigma.len() != species_index.len() {
            return Err(Error::BadDimension { expected: species_index.len(), got: sigma.len() });
        }
        if sigma.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParams("spins must be +1 or -1".into()));
        }
        Ok(Self { sigma, species_index })
    }

    pub fn all_up(species_index: Vec<usize>) -> Self {
        Self { sigma: vec![1; species_index.len()], species_index }
    }
}

/// `beta/sqrt(N) sum_{i,j} g_ij s_i s_j + h sum_i s_i`.
pub fn hamiltonian(d: &DisorderSample, c: &SpinConfig, tf: TempField) -> f64 {
    let n = d.n;
    let mut pair = 0.0;
    for i in 0..n {
        let si = c.sigma[i] as f64;
        let row = &d.g[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for (gij, &sj) in row.iter().zip(&c.sigma) {
            acc += gij * sj as f64;
        }
        pair += si * acc;
    }
    let field: f64 = c.sigma.iter().map(|&s| s as f64).sum();
    tf.beta / (n as f64).sqrt() * pair + tf.h * field
}

/// Change in `H` when spin `k` flips.
pub fn flip_delta(d: &DisorderSample, c: &SpinConfig, tf: TempField, k: usize) -> f64 {
    let n = d.n;
    let mut local = 0.0;
    for j in 0..n {
        if j != k {
            local += (d.get(k, j) + d.get(j, k)) * c.sigma[j] as f64;
        }
    }
    -2.0 * c.sigma[k] as f64 * (tf.beta / (n as f64).sqrt() * local + tf.h)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoltzmannWeight {
    /// `exp(H)`.
    #[default]
    Hamiltonian,
    /// `exp(beta H)`.
    BetaTimesHamiltonian,
}

impl BoltzmannWeight {
    fn factor(self, beta: f64) -> f64 {
        match self {
            BoltzmannWeight::Hamiltonian => 1.0,
            BoltzmannWeight::BetaTimesHamiltonian => beta,
        }
    }
}

/// Streaming `log sum exp(x_i)`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationOrder {
    /// Gray-code walk starting from all spins up.
    Forward,
    /// The same walk with every configuration negated.
    Negated,
}

/// `log Z` by a Gray-code walk over all `2^N` configurations, updating the
/// local fields in `O(N)` per step. `shift` is subtracted from every
/// exponent and added back at the end.
pub fn log_partition(
    d: &DisorderSample,
    tf: TempField,
    weight: BoltzmannWeight,
    order: EnumerationOrder,
    shift: f64,
) -> Result<f64> {
    let n = d.n;
    if n > MAX_EXACT_N {
        return Err(Error::Unsupported(format!("exact enumeration needs N <= {MAX_EXACT_N}, got {n}")));
    }
    let scale = tf.beta / (n as f64).sqrt();
    // symmetric couplings without the diagonal, which only adds a constant
    let mut j = vec![0.0; n * n];
    let mut diag = 0.0;
    for a in 0..n {
        diag += d.get(a, a);
        for b in 0..n {
            if a != b {
                j[a * n + b] = scale * (d.get(a, b) + d.get(b, a));
            }
        }
    }
    let start: i8 = match order {
        EnumerationOrder::Forward => 1,
        EnumerationOrder::Negated => -1,
    };
    let mut sigma = vec![start as f64; n];
    let mut field: Vec<f64> = (0..n).map(|a| (0..n).map(|b| j[a * n + b] * sigma[b]).sum()).collect();
    let mut energy = 0.5 * sigma.iter().zip(&field).map(|(s, f)| s * f).sum::<f64>()
        + tf.h * sigma.iter().sum::<f64>()
        + scale * diag;
    let w = weight.factor(tf.beta);
    let mut lse = LogSumExp::default();
    lse.push(w * energy - shift);
    for step in 1u64..(1u64 << n) {
        let k = step.trailing_zeros() as usize;
        let sk = sigma[k];
        energy -= 2.0 * sk * (field[k] + tf.h);
        sigma[k] = -sk;
        let change = -2.0 * sk;
        let row = &j[k * n..(k + 1) * n];
        for (f, jk) in field.iter_mut().zip(row) {
            *f += jk * change;
        }
        lse.push(w * energy - shift);
    }
    let v = lse.value() + shift;
    if !v.is_finite() {
        return Err(Error::Overflow(format!("log Z is not finite: {v}")));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyEstimate {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `log Z / N` per disorder sample.
    pub samples: Vec<f64>,
}

/// Disorder average of `log Z / N` by exact enumeration.
pub fn free_energy_exact(
    spec: &ModelSpec,
    tf: TempField,
    n: usize,
    n_disorder: usize,
    seed: u64,
    weight: BoltzmannWeight,
) -> Result<FreeEnergyEstimate> {
    if n > MAX_EXACT_N {
        return Err(Error::Unsupported(format!("exact enumeration needs N <= {MAX_EXACT_N}, got {n}")));
    }
    if n == 0 || n_disorder == 0 {
        return Err(Error::InvalidParams("need N >= 1 and at least one disorder sample".into()));
    }
    let samples = (0..n_disorder as u64)
        .into_par_iter()
        .map(|k| {
            let d = DisorderSample::generate(spec, n, disorder_seed(seed, k));
            log_partition(&d, tf, weight, EnumerationOrder::Forward, 0.0).map(|v| v / n as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, stderr) = mean_stderr(&samples);
    Ok(FreeEnergyEstimate { n, mean, stderr, samples })
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapOptions {
    pub sweeps: usize,
    /// Sweeps discarded before recording.
    pub burn_in: usize,
    pub bins: usize,
    pub weight: BoltzmannWeight,
}

impl Default for OverlapOptions {
    fn default() -> Self {
        Self { sweeps: 2000, burn_in: 500, bins: 20, weight: BoltzmannWeight::Hamiltonian }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub species: usize,
    /// `bins + 1` edges on `[0, 1]`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapHistogram {
    pub n: usize,
    pub per_species: Vec<Histogram>,
}

/// Histograms of `R_s = |sum_{i in I_s} s1_i s2_i| / |I_s|` from two
/// independent Metropolis replicas per disorder sample, one record per
/// sweep after burn-in.
pub fn overlap_histogram(
    spec: &ModelSpec,
    tf: TempField,
    n: usize,
    n_disorder: usize,
    seed: u64,
    opts: &OverlapOptions,
) -> Result<OverlapHistogram> {
    if n == 0 || n > MAX_MC_N {
        return Err(Error::Unsupported(format!("overlap sampling needs 1 <= N <= {MAX_MC_N}, got {n}")));
    }
    if opts.bins == 0 || opts.burn_in >= opts.sweeps {
        return Err(Error::InvalidParams("need bins >= 1 and burn_in < sweeps".into()));
    }
    let m = spec.species();
    let traces: Vec<Vec<Vec<f64>>> = (0..n_disorder as u64)
        .into_par_iter()
        .map(|k| {
            let d = DisorderSample::generate(spec, n, disorder_seed(seed, k));
            replica_overlaps(&d, m, tf, opts, disorder_seed(seed, k))
        })
        .collect();
    let per_species = (0..m)
        .map(|s| {
            let values: Vec<f64> = traces.iter().flat_map(|t| t[s].iter().copied()).collect();
            histogram(s, &values, opts.bins)
        })
        .collect();
    Ok(OverlapHistogram { n, per_species })
}

fn replica_overlaps(d: &DisorderSample, m: usize, tf: TempField, opts: &OverlapOptions, seed: u64) -> Vec<Vec<f64>> {
    let n = d.n;
    let scale = tf.beta / (n as f64).sqrt();
    let w = opts.weight.factor(tf.beta);
    let sizes: Vec<usize> = (0..m).map(|s| d.species_index.iter().filter(|&&x| x == s).count()).collect();
    let mut chains: Vec<Chain> = (0..2u64)
        .map(|r| Chain::new(d, scale, tf.h, ChaCha8Rng::seed_from_u64(splitmix64(seed ^ (r + 1)))))
        .collect();
    let mut out = vec![Vec::with_capacity(opts.sweeps - opts.burn_in); m];
    for sweep in 0..opts.sweeps {
        for c in chains.iter_mut() {
            c.sweep(w);
        }
        if sweep >= opts.burn_in {
            let mut dot = vec![0.0; m];
            for i in 0..n {
                dot[d.species_index[i]] += chains[0].sigma[i] * chains[1].sigma[i];
            }
            for s in 0..m {
                if sizes[s] > 0 {
                    out[s].push(dot[s].abs() / sizes[s] as f64);
                }
            }
        }
    }
    out
}

struct Chain {
    n: usize,
    /// Symmetrized couplings without the diagonal.
    j: Vec<f64>,
    h: f64,
    sigma: Vec<f64>,
    field: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Chain {
    fn new(d: &DisorderSample, scale: f64, h: f64, mut rng: ChaCha8Rng) -> Self {
        let n = d.n;
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    j[a * n + b] = scale * (d.get(a, b) + d.get(b, a));
                }
            }
        }
        let sigma: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let field = (0..n).map(|a| (0..n).map(|b| j[a * n + b] * sigma[b]).sum()).collect();
        Self { n, j, h, sigma, field, rng }
    }

    fn sweep(&mut self, w: f64) {
        for k in 0..self.n {
            let sk = self.sigma[k];
            let delta = -2.0 * sk * (self.field[k] + self.h) * w;
            if delta >= 0.0 || self.rng.gen::<f64>() < delta.exp() {
                self.sigma[k] = -sk;
                let change = -2.0 * sk;
                let row = &self.j[k * self.n..(k + 1) * self.n];
                for (f, jk) in self.field.iter_mut().zip(row) {
                    *f += jk * change;
                }
            }
        }
    }
}

fn histogram(species: usize, values: &[f64], bins: usize) -> Histogram {
    let edges: Vec<f64> = (0..=bins).map(|b| b as f64 / bins as f64).collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let (mean, _) = mean_stderr(values);
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Histogram { species, edges, counts, mean, std }
}

/// CSV with columns `species,bin_left,bin_right,count`.
pub fn write_histogram_csv(w: &mut impl std::io::Write, hist: &OverlapHistogram) -> std::io::Result<()> {
    writeln!(w, "species,bin_left,bin_right,count")?;
    for h in &hist.per_species {
        for (b, c) in h.counts.iter().enumerate() {
            writeln!(w, "{},{:.16e},{:.16e},{}", h.species, h.edges[b], h.edges[b + 1], c)?;
        }
    }
    Ok(())
}
