//! Checks the `C1` shift against the Laplace transform `exp(lambda ln lambda)`
//! and regenerates `data/cauchy1_ref.csv`.
//!
//! cargo run --release -p bgwlab --example cauchy_reference -- crates/core/data/cauchy1_ref.csv

use bgwlab::refdist::{self, REFERENCE_DRAWS, REFERENCE_SEED};
use bgwlab::rng::rng_from_seed;

fn main() {
    let out = std::env::args().nth(1);
    let mut rng = rng_from_seed(REFERENCE_SEED ^ 1);
    let z: Vec<f64> = (0..REFERENCE_DRAWS).map(|_| refdist::sample_cauchy1(&mut rng)).collect();
    for lambda in [0.5, 1.0, 2.0] {
        let (m, se) = refdist::laplace_estimate(&z, lambda);
        let target = (lambda * f64::ln(lambda)).exp();
        // Implied shift correction: E e^{-lambda (Z + d)} = target  =>  d = ln(m / target) / lambda.
        println!(
            "lambda {lambda}: E e^(-lambda Z) = {m:.6} +- {se:.6}, target {target:.6}, z-score {:.2}, implied shift correction {:.5}",
            (m - target) / se,
            (m / target).ln() / lambda
        );
    }
    if let Some(path) = out {
        let table = refdist::build_cauchy1_reference(REFERENCE_DRAWS, REFERENCE_SEED).expect("table");
        std::fs::write(&path, table.to_csv()).expect("write table");
        println!("wrote {path}");
    }
}
