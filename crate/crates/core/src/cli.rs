//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the exit code with the text destined for stdout
//! and stderr, so the whole surface is testable in-process.
//!
//! Configuration comes from an optional JSON file (`--config`) whose fields
//! are overridden by flags. Every output carries the resolved configuration
//! and the crate version: as `#` lines at the top of CSV, as fields of JSON.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atline::{at_line_beta, at_verdict, ATReport, Verdict};
use crate::error::Error;
use crate::model::{validate, ModelSpec, TempField, ValidationMode};
use crate::onersb::{certify, CertifyOptions, OneRSBCertificate};
use crate::parisi::{evaluate, ParisiParams};
use crate::quadrature::{QuadRule, DEFAULT_ORDER};
use crate::rs::{solve_fixed_point, RSSolution, SolverOptions};
use crate::simulate::{
    free_energy_exact, overlap_histogram, write_histogram_csv, BoltzmannWeight, FreeEnergyEstimate,
    OverlapHistogram, OverlapOptions,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `min,max,steps`; `steps = 1` is the single point `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.min];
        }
        let d = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + d * i as f64).collect()
    }

    pub fn resolution(&self) -> f64 {
        if self.steps <= 1 {
            0.0
        } else {
            (self.max - self.min) / (self.steps - 1) as f64
        }
    }

    fn check(&self, name: &str) -> Result<(), String> {
        if self.steps == 0 {
            return Err(format!("{name}: steps must be at least 1"));
        }
        if self.steps > 1 && !(self.min < self.max) {
            return Err(format!("{name}: need min < max, got {} and {}", self.min, self.max));
        }
        Ok(())
    }
}

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected min,max,steps, got {s:?}"));
        }
        let num = |p: &str| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
        let steps = parts[2].parse::<usize>().map_err(|e| format!("{:?}: {e}", parts[2]))?;
        Ok(Range { min: num(parts[0])?, max: num(parts[1])?, steps })
    }
}

/// The experiment record. Every field is optional in the file; the echoed
/// copy in outputs has all fields used by the command filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Row-major `M x M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ValidationMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_range: Option<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_range: Option<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<f64>>,
    /// `M` rows of `k + 1` overlaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_disorder: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<BoltzmannWeight>,
}

/// JSON output envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output<T> {
    pub version: String,
    pub command: String,
    pub config: Config,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyResult {
    pub report: ATReport,
    pub certificate: Option<OneRSBCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParisiValue {
    pub value: f64,
}

#[derive(Parser, Debug)]
#[command(name = "msk", version, about = "Multi-species SK model: RS solver, AT line, 1RSB certificates, finite-N checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the RS fixed point and print it as JSON.
    SolveRs(Common),
    /// AT line beta(h) over an h grid, as CSV.
    AtLine {
        #[command(flatten)]
        common: Common,
        /// h grid as min,max,steps.
        #[arg(long)]
        h_range: Option<Range>,
    },
    /// Verdict, beta2_m and certificate gap over a (beta, h) grid, as CSV.
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        /// beta grid as min,max,steps.
        #[arg(long)]
        beta_range: Option<Range>,
        /// h grid as min,max,steps.
        #[arg(long)]
        h_range: Option<Range>,
    },
    /// Verdict and, above the line, a 1RSB point beating RS, as JSON.
    Certify(Common),
    /// Evaluate the k-level functional, as JSON.
    ParisiEval {
        #[command(flatten)]
        common: Common,
        /// k increasing weights in (0, 1).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        zeta: Option<Vec<f64>>,
        /// Row-major M x (k + 1) overlaps.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        q: Option<Vec<f64>>,
    },
    /// Exact-enumeration free energy over disorder samples, as JSON.
    McFreeEnergy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Metropolis overlap histograms, as CSV or JSON.
    OverlapHist {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long = "h", allow_negative_numbers = true)]
    h: Option<f64>,
    /// Row-major M x M variances.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    delta2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// convex, two-species-standard or unchecked.
    #[arg(long)]
    mode: Option<ValidationMode>,
    /// Gauss-Hermite order.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SimArgs {
    /// Number of spins.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_disorder: Option<usize>,
    #[arg(long, value_enum)]
    weight: Option<WeightArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum WeightArg {
    Hamiltonian,
    BetaTimesHamiltonian,
}

impl From<WeightArg> for BoltzmannWeight {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Hamiltonian => BoltzmannWeight::Hamiltonian,
            WeightArg::BetaTimesHamiltonian => BoltzmannWeight::BetaTimesHamiltonian,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Usage(String),
    Numerical(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs one command line (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let code = if e.use_stderr() { 1 } else { 0 };
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let out = match &cli.command {
        Command::SolveRs(c)
        | Command::AtLine { common: c, .. }
        | Command::PhaseDiagram { common: c, .. }
        | Command::Certify(c)
        | Command::ParisiEval { common: c, .. }
        | Command::McFreeEnergy { common: c, .. }
        | Command::OverlapHist { common: c, .. } => c.out.clone(),
    };
    match dispatch(&cli.command) {
        Ok(text) => match out {
            Some(path) => match std::fs::write(&path, &text) {
                Ok(()) => Outcome { code: 0, stdout: String::new(), stderr: String::new() },
                Err(e) => Outcome { code: 1, stdout: String::new(), stderr: format!("cannot write {}: {e}\n", path.display()) },
            },
            None => Outcome { code: 0, stdout: text, stderr: String::new() },
        },
        Err(Failure::Usage(msg)) => Outcome { code: 1, stdout: String::new(), stderr: format!("error: {msg}\n") },
        Err(Failure::Numerical(e)) => Outcome { code: 2, stdout: String::new(), stderr: format!("numerical failure: {e}\n") },
    }
}

fn load(common: &Common) -> CliResult<Config> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<Config>(&text)
                .map_err(|e| Failure::Usage(format!("bad config {}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    macro_rules! over {
        ($($f:ident),*) => { $( if let Some(v) = common.$f.clone() { cfg.$f = Some(v); } )* };
    }
    over!(beta, h, delta2, lambda, mode, order, seed);
    Ok(cfg)
}

struct Resolved {
    spec: ModelSpec,
    rule: QuadRule,
    opts: SolverOptions,
}

fn resolve_model(cfg: &mut Config) -> CliResult<Resolved> {
    let lambda = cfg.lambda.clone().ok_or_else(|| Failure::Usage("missing field: lambda".into()))?;
    let delta2 = cfg.delta2.clone().ok_or_else(|| Failure::Usage("missing field: delta2".into()))?;
    let m = cfg.m.unwrap_or(lambda.len());
    let spec = ModelSpec::from_row_major(m, &delta2, lambda).map_err(|e| Failure::Usage(e.to_string()))?;
    let mode = cfg.mode.unwrap_or(ValidationMode::Convex);
    let report = validate(&spec, mode);
    if !report.passed() {
        let names: Vec<String> = report.failures().iter().map(|c| format!("{} ({})", c.name, c.detail)).collect();
        return Err(Failure::Usage(format!("model fails {mode:?} validation: {}", names.join("; "))));
    }
    let order = cfg.order.unwrap_or(DEFAULT_ORDER);
    let rule = QuadRule::gauss_hermite(order).map_err(|e| Failure::Usage(e.to_string()))?;
    let defaults = SolverOptions::default();
    let opts = SolverOptions {
        tol: cfg.tol.unwrap_or(defaults.tol),
        max_iter: cfg.max_iter.unwrap_or(defaults.max_iter),
        damping: cfg.damping.unwrap_or(defaults.damping),
    };
    cfg.m = Some(m);
    cfg.mode = Some(mode);
    cfg.order = Some(order);
    cfg.tol = Some(opts.tol);
    cfg.max_iter = Some(opts.max_iter);
    cfg.damping = Some(opts.damping);
    Ok(Resolved { spec, rule, opts })
}

fn temp_field(cfg: &Config) -> CliResult<TempField> {
    let beta = cfg.beta.ok_or_else(|| Failure::Usage("missing field: beta".into()))?;
    let h = cfg.h.ok_or_else(|| Failure::Usage("missing field: h".into()))?;
    TempField::new(beta, h).map_err(|e| Failure::Usage(e.to_string()))
}

fn json<T: Serialize>(command: &str, config: Config, result: T) -> CliResult<String> {
    let out = Output { version: VERSION.to_string(), command: command.to_string(), config, result };
    let mut s = serde_json::to_string_pretty(&out).map_err(|e| Failure::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_header(command: &str, config: &Config) -> String {
    let cfg = serde_json::to_string(config).unwrap_or_default();
    format!("# msk {VERSION} {command}\n# config: {cfg}\n")
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn dispatch(cmd: &Command) -> CliResult<String> {
    match cmd {
        Command::SolveRs(common) => {
            let mut cfg = load(common)?;
            let r = resolve_model(&mut cfg)?;
            let tf = temp_field(&cfg)?;
            let sol: RSSolution = solve_fixed_point(&r.spec, tf, &r.rule, &r.opts)?;
            json("solve-rs", cfg, sol)
        }
        Command::AtLine { common, h_range } => {
            let mut cfg = load(common)?;
            if let Some(g) = h_range {
                cfg.h_range = Some(*g);
            }
            let r = resolve_model(&mut cfg)?;
            if r.spec.species() != 2 {
                return Err(Failure::Usage("at-line needs two species".into()));
            }
            let grid = cfg.h_range.ok_or_else(|| Failure::Usage("missing field: h_range".into()))?;
            grid.check("h_range").map_err(Failure::Usage)?;
            at_line_csv(&cfg, &r, grid)
        }
        Command::PhaseDiagram { common, beta_range, h_range } => {
            let mut cfg = load(common)?;
            if let Some(g) = beta_range {
                cfg.beta_range = Some(*g);
            }
            if let Some(g) = h_range {
                cfg.h_range = Some(*g);
            }
            let r = resolve_model(&mut cfg)?;
            let bg = cfg.beta_range.ok_or_else(|| Failure::Usage("missing field: beta_range".into()))?;
            let hg = cfg.h_range.ok_or_else(|| Failure::Usage("missing field: h_range".into()))?;
            bg.check("beta_range").map_err(Failure::Usage)?;
            hg.check("h_range").map_err(Failure::Usage)?;
            phase_diagram_csv(&cfg, &r, bg, hg)
        }
        Command::Certify(common) => {
            let mut cfg = load(common)?;
            let r = resolve_model(&mut cfg)?;
            let tf = temp_field(&cfg)?;
            let report = at_verdict(&r.spec, tf, &r.rule, &r.opts)?;
            let certificate = if report.verdict == Verdict::RsbCertified {
                Some(certify(&r.spec, tf, &report, &r.rule, &CertifyOptions::default())?)
            } else {
                None
            };
            json("certify", cfg, CertifyResult { report, certificate })
        }
        Command::ParisiEval { common, zeta, q } => {
            let mut cfg = load(common)?;
            if let Some(z) = zeta {
                cfg.zeta = Some(z.clone());
            }
            let r = resolve_model(&mut cfg)?;
            if let Some(flat) = q {
                let m = r.spec.species();
                if flat.is_empty() || flat.len() % m != 0 {
                    return Err(Failure::Usage(format!("--q needs a multiple of {m} entries")));
                }
                cfg.q = Some(flat.chunks(flat.len() / m).map(<[f64]>::to_vec).collect());
            }
            let tf = temp_field(&cfg)?;
            let params = ParisiParams::new(
                cfg.zeta.clone().unwrap_or_default(),
                cfg.q.clone().ok_or_else(|| Failure::Usage("missing field: q".into()))?,
            )
            .map_err(|e| Failure::Usage(e.to_string()))?;
            let value = evaluate(&r.spec, tf, &params, &r.rule)?;
            json("parisi-eval", cfg, ParisiValue { value })
        }
        Command::McFreeEnergy { common, sim } => {
            let mut cfg = load(common)?;
            apply_sim(&mut cfg, sim);
            let r = resolve_model(&mut cfg)?;
            let tf = temp_field(&cfg)?;
            let (n, n_disorder, seed, weight) = sim_fields(&mut cfg, 16, 32)?;
            let est: FreeEnergyEstimate = free_energy_exact(&r.spec, tf, n, n_disorder, seed, weight)?;
            json("mc-free-energy", cfg, est)
        }
        Command::OverlapHist { common, sim, sweeps, burn_in, bins, format } => {
            let mut cfg = load(common)?;
            apply_sim(&mut cfg, sim);
            if sweeps.is_some() {
                cfg.sweeps = *sweeps;
            }
            if burn_in.is_some() {
                cfg.burn_in = *burn_in;
            }
            if bins.is_some() {
                cfg.bins = *bins;
            }
            let r = resolve_model(&mut cfg)?;
            let tf = temp_field(&cfg)?;
            let (n, n_disorder, seed, weight) = sim_fields(&mut cfg, 64, 4)?;
            let defaults = OverlapOptions::default();
            let opts = OverlapOptions {
                sweeps: cfg.sweeps.unwrap_or(defaults.sweeps),
                burn_in: cfg.burn_in.unwrap_or(defaults.burn_in),
                bins: cfg.bins.unwrap_or(defaults.bins),
                weight,
            };
            cfg.sweeps = Some(opts.sweeps);
            cfg.burn_in = Some(opts.burn_in);
            cfg.bins = Some(opts.bins);
            if opts.bins == 0 || opts.burn_in >= opts.sweeps {
                return Err(Failure::Usage("need bins >= 1 and burn_in < sweeps".into()));
            }
            let hist: OverlapHistogram = overlap_histogram(&r.spec, tf, n, n_disorder, seed, &opts)?;
            match format {
                Format::Json => json("overlap-hist", cfg, hist),
                Format::Csv => {
                    let mut buf = csv_header("overlap-hist", &cfg).into_bytes();
                    write_histogram_csv(&mut buf, &hist).map_err(|e| Failure::Usage(e.to_string()))?;
                    Ok(String::from_utf8(buf).expect("csv is utf-8"))
                }
            }
        }
    }
}

fn apply_sim(cfg: &mut Config, sim: &SimArgs) {
    if sim.n.is_some() {
        cfg.n = sim.n;
    }
    if sim.n_disorder.is_some() {
        cfg.n_disorder = sim.n_disorder;
    }
    if let Some(w) = sim.weight {
        cfg.weight = Some(w.into());
    }
}

fn sim_fields(cfg: &mut Config, n: usize, n_disorder: usize) -> CliResult<(usize, usize, u64, BoltzmannWeight)> {
    let n = cfg.n.unwrap_or(n);
    let n_disorder = cfg.n_disorder.unwrap_or(n_disorder);
    if n == 0 || n_disorder == 0 {
        return Err(Failure::Usage("need n >= 1 and n_disorder >= 1".into()));
    }
    let seed = cfg.seed.unwrap_or(0);
    let weight = cfg.weight.unwrap_or_default();
    cfg.n = Some(n);
    cfg.n_disorder = Some(n_disorder);
    cfg.seed = Some(seed);
    cfg.weight = Some(weight);
    Ok((n, n_disorder, seed, weight))
}

fn at_line_csv(cfg: &Config, r: &Resolved, grid: Range) -> CliResult<String> {
    let rows: Vec<(f64, Result<f64, String>)> = grid
        .points()
        .into_par_iter()
        .map(|h| (h, at_line_beta(&r.spec, h, &r.rule, &r.opts, 1e-10).map(|p| p.beta).map_err(|e| e.to_string())))
        .collect();
    let mut s = csv_header("at-line", cfg);
    let tol = 10.0 * grid.resolution();
    let mut prev: Option<f64> = None;
    for (h, r) in &rows {
        if let (Some(p), Ok(b)) = (prev, r) {
            if (b - p).abs() >= tol {
                s.push_str(&format!("# warning: beta jumps by {:e} at h = {h}\n", (b - p).abs()));
            }
        }
        if let Ok(b) = r {
            prev = Some(*b);
        }
    }
    s.push_str("h,beta,beta2,status\n");
    for (h, r) in rows {
        match r {
            Ok(b) => s.push_str(&format!("{},{},{},ok\n", fmt(h), fmt(b), fmt(b * b))),
            Err(e) => s.push_str(&format!("{},,,\"failed: {}\"\n", fmt(h), e.replace('"', "'"))),
        }
    }
    Ok(s)
}

struct PhaseRow {
    beta: f64,
    h: f64,
    verdict: Result<Verdict, String>,
    beta2_m: Option<f64>,
    gap: Option<f64>,
}

fn phase_row(r: &Resolved, beta: f64, h: f64) -> PhaseRow {
    let mut row = PhaseRow { beta, h, verdict: Err(String::new()), beta2_m: None, gap: None };
    let tf = match TempField::new(beta, h) {
        Ok(tf) => tf,
        Err(e) => {
            row.verdict = Err(e.to_string());
            return row;
        }
    };
    match at_verdict(&r.spec, tf, &r.rule, &r.opts) {
        Ok(report) => {
            row.beta2_m = report.thresholds.map(|t| t.beta2_m);
            if report.verdict == Verdict::RsbCertified {
                row.gap = match certify(&r.spec, tf, &report, &r.rule, &CertifyOptions::default()) {
                    Ok(c) => Some(c.max_gap),
                    Err(Error::CertificateNotFound { max_gap }) => Some(max_gap),
                    Err(_) => None,
                };
            }
            row.verdict = Ok(report.verdict);
        }
        Err(e) => row.verdict = Err(e.to_string()),
    }
    row
}

fn phase_diagram_csv(cfg: &Config, r: &Resolved, bg: Range, hg: Range) -> CliResult<String> {
    let betas = bg.points();
    let hs = hg.points();
    let cells: Vec<(f64, f64)> = hs.iter().flat_map(|&h| betas.iter().map(move |&b| (b, h))).collect();
    let rows: Vec<PhaseRow> = cells.into_par_iter().map(|(b, h)| phase_row(r, b, h)).collect();
    let mut s = csv_header("phase-diagram", cfg);
    // along each h-slice the verdict should flip from RS to RSB at most once
    for slice in rows.chunks(betas.len()) {
        let flags: Vec<bool> = slice
            .iter()
            .filter_map(|row| match row.verdict {
                Ok(Verdict::RsConsistent) => Some(false),
                Ok(Verdict::RsbCertified) => Some(true),
                _ => None,
            })
            .collect();
        let flips = flags.windows(2).filter(|w| w[0] != w[1]).count();
        if flips > 1 || flags.windows(2).any(|w| w[0] && !w[1]) {
            s.push_str(&format!("# warning: verdict is not monotone in beta at h = {}\n", slice[0].h));
        }
    }
    s.push_str("beta,h,verdict,beta2_m,gap\n");
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    for row in rows {
        let verdict = match &row.verdict {
            Ok(v) => v.to_string(),
            Err(e) => format!("\"error: {}\"", e.replace('"', "'")),
        };
        s.push_str(&format!("{},{},{},{},{}\n", fmt(row.beta), fmt(row.h), verdict, opt(row.beta2_m), opt(row.gap)));
    }
    Ok(s)
}
