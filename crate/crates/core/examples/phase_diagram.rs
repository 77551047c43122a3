//! Verdicts on a small (beta, h) grid, through the command-line interface.

pub fn run_example() -> String {
    let out = msk::cli::run([
        "msk",
        "phase-diagram",
        "--delta2",
        "1.5,1,1,1.2",
        "--lambda",
        "0.6,0.4",
        "--mode",
        "two-species-standard",
        "--beta-range",
        "0.4,1.2,5",
        "--h-range",
        "0.2,0.6,3",
        "--order",
        "41",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    out.stdout
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
