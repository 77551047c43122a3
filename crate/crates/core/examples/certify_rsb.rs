//! Above the AT line: an explicit 1RSB point with a lower value than RS.

use msk::atline::{at_line_beta, at_verdict, ATReport};
use msk::onersb::{certify, CertifyOptions, OneRSBCertificate};
use msk::rs::SolverOptions;
use msk::{ModelSpec, QuadRule, TempField};

pub fn run_example() -> (ATReport, OneRSBCertificate) {
    let spec = ModelSpec::two_species(1.5, 1.2, 0.6).unwrap();
    let rule = QuadRule::default();
    let opts = SolverOptions::default();
    let h = 0.3;
    let line = at_line_beta(&spec, h, &rule, &opts, 1e-10).unwrap();
    let tf = TempField::new(line.beta * 1.5f64.sqrt(), h).unwrap();
    let report = at_verdict(&spec, tf, &rule, &opts).unwrap();
    let cert = certify(&spec, tf, &report, &rule, &CertifyOptions::default()).unwrap();
    (report, cert)
}

#[allow(dead_code)]
fn main() {
    let (report, cert) = run_example();
    println!("beta = {:.6}, h = {}, verdict = {}", report.beta, report.h, report.verdict);
    println!("thresholds: {:?}", report.thresholds.unwrap());
    println!("witness x = {:?}", cert.x);
    println!("eps = {:e}, zeta = {:.4}", cert.epsilon, cert.zeta);
    println!("RS = {:.12}, 1RSB = {:.12}, gap = {:e}", cert.rs_value, cert.value, cert.gap);
    println!("largest gap {:e} at eps = {:e}, zeta = {:.4}", cert.max_gap, cert.max_gap_epsilon, cert.max_gap_zeta);
}
