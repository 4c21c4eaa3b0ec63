//! Prints the five-method accuracy ladder on the bundled IRIS data.
//!
//!   cargo run --release -p apnn-core --example accuracy_ladder [seed]

use apnn_core::{cross_validate, iris, CvOptions, Method};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(42);
    let d = iris();
    let opts = CvOptions::default();
    for method in Method::ALL {
        let r = cross_validate(&d, method, 5, seed, &opts).expect("cross-validation");
        let folds: Vec<String> = r
            .folds
            .iter()
            .map(|f| format!("{:.3}", f.accuracy))
            .collect();
        println!(
            "{:<16} mean {:.4}  std {:.4}  folds [{}]",
            method.id(),
            r.mean_accuracy,
            r.std_accuracy,
            folds.join(", ")
        );
    }
}
