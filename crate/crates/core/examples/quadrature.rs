//! Gaussian expectations with the Gauss-Hermite rule.

use msk::quadrature::{expect_cosh_closed, GaussianArg, QuadRule};
use msk::special::{log_cosh, sech4};

pub fn run_example() -> Vec<(String, f64)> {
    let rule = QuadRule::default();
    let arg = GaussianArg::new(0.8, 0.5, 0.3);
    let cosh = rule.expect(arg, f64::cosh).unwrap();
    let exact = expect_cosh_closed(0.4, 0.3).unwrap();
    vec![
        ("E cosh(0.4 eta + 0.3)".into(), cosh),
        ("closed form".into(), exact),
        ("E log cosh(0.4 eta + 0.3)".into(), rule.expect(arg, log_cosh).unwrap()),
        ("E sech^4(0.4 eta + 0.3)".into(), rule.expect(arg, sech4).unwrap()),
    ]
}

#[allow(dead_code)]
fn main() {
    for (name, v) in run_example() {
        println!("{name:32} {v:.15}");
    }
}
