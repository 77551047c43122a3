//! The generic k-level functional against the RS and 1RSB closed forms.

use msk::onersb::{p1rsb, OneRSBPoint};
use msk::parisi::{evaluate, ParisiParams};
use msk::rs::rs_functional;
use msk::{ModelSpec, QuadRule, TempField};

pub fn run_example() -> [(f64, f64); 2] {
    let spec = ModelSpec::two_species(1.5, 1.2, 0.6).unwrap();
    let rule = QuadRule::gauss_hermite(31).unwrap();
    let tf = TempField::new(0.9, 0.3).unwrap();
    let (q, p) = ([0.2, 0.3], [0.5, 0.45]);
    let rs = (
        evaluate(&spec, tf, &ParisiParams::replica_symmetric(&q).unwrap(), &rule).unwrap(),
        rs_functional(&spec, tf, &q, &rule).unwrap(),
    );
    let one = (
        evaluate(&spec, tf, &ParisiParams::one_step(&q, &p, 0.6).unwrap(), &rule).unwrap(),
        p1rsb(&spec, tf, &OneRSBPoint::new(q.to_vec(), p.to_vec(), 0.6).unwrap(), &rule).unwrap(),
    );
    [rs, one]
}

#[allow(dead_code)]
fn main() {
    let [rs, one] = run_example();
    println!("k = 0: recursion {:.15}, closed form {:.15}", rs.0, rs.1);
    println!("k = 1: recursion {:.15}, closed form {:.15}", one.0, one.1);
}
