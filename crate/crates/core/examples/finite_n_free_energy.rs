//! Exact finite-N free energy next to the RS prediction.

use msk::rs::{solve_fixed_point, SolverOptions};
use msk::simulate::{free_energy_exact, BoltzmannWeight, FreeEnergyEstimate};
use msk::{ModelSpec, QuadRule, TempField};

pub fn run_example() -> (FreeEnergyEstimate, f64) {
    let spec = ModelSpec::two_species(1.5, 1.2, 0.6).unwrap();
    let tf = TempField::new(0.3, 0.4).unwrap();
    let est = free_energy_exact(&spec, tf, 14, 40, 7, BoltzmannWeight::Hamiltonian).unwrap();
    let rs = solve_fixed_point(&spec, tf, &QuadRule::default(), &SolverOptions::default()).unwrap();
    (est, rs.rs_value)
}

#[allow(dead_code)]
fn main() {
    let (est, rs) = run_example();
    println!("N = {}: log Z / N = {:.6} +- {:.6}", est.n, est.mean, est.stderr);
    println!("RS value      = {rs:.6}");
}
