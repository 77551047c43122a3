//! The AT line beta(h) for a two-species model.

use msk::atline::at_line_beta;
use msk::rs::SolverOptions;
use msk::{ModelSpec, QuadRule};

pub fn run_example() -> Vec<(f64, f64)> {
    let spec = ModelSpec::two_species(1.5, 1.2, 0.6).unwrap();
    let rule = QuadRule::default();
    let opts = SolverOptions::default();
    [0.01, 0.1, 0.2, 0.4, 0.8]
        .iter()
        .map(|&h| (h, at_line_beta(&spec, h, &rule, &opts, 1e-10).unwrap().beta))
        .collect()
}

#[allow(dead_code)]
fn main() {
    println!("{:>6} {:>14} {:>14}", "h", "beta", "beta^2");
    for (h, b) in run_example() {
        println!("{h:>6} {b:>14.10} {:>14.10}", b * b);
    }
}
