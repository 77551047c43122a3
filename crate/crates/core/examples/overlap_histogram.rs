//! Species overlap histograms from two Metropolis replicas.

use msk::simulate::{overlap_histogram, write_histogram_csv, OverlapHistogram, OverlapOptions};
use msk::{ModelSpec, TempField};

pub fn run_example() -> OverlapHistogram {
    let spec = ModelSpec::two_species(1.5, 1.2, 0.6).unwrap();
    let tf = TempField::new(0.4, 0.3).unwrap();
    let opts = OverlapOptions { sweeps: 400, burn_in: 100, bins: 10, ..Default::default() };
    overlap_histogram(&spec, tf, 48, 4, 3, &opts).unwrap()
}

#[allow(dead_code)]
fn main() {
    let hist = run_example();
    for h in &hist.per_species {
        println!("# species {}: mean {:.4}, std {:.4}", h.species, h.mean, h.std);
    }
    write_histogram_csv(&mut std::io::stdout(), &hist).unwrap();
}
