//! Replica-symmetric critical point of a two-species model.

use msk::rs::{solve_fixed_point, uniqueness_threshold, RSSolution, SolverOptions};
use msk::{ModelSpec, QuadRule, TempField};

pub fn run_example() -> (f64, RSSolution) {
    let spec = ModelSpec::two_species(1.5, 1.2, 0.6).unwrap();
    let tf = TempField::new(0.6, 0.4).unwrap();
    let sol = solve_fixed_point(&spec, tf, &QuadRule::default(), &SolverOptions::default()).unwrap();
    (uniqueness_threshold(&spec).unwrap(), sol)
}

#[allow(dead_code)]
fn main() {
    let (b0, sol) = run_example();
    println!("uniqueness threshold beta^2 = {b0:.12}");
    println!("q_*      = {:?}", sol.q_star);
    println!("Q1       = {:?}", sol.q_vec);
    println!("RS value = {:.12}", sol.rs_value);
    println!("residual = {:e} after {} iterations (unique: {})", sol.residual, sol.iterations, sol.unique);
}
