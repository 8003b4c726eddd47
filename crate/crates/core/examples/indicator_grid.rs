//! Featurize a corpus with the default 810-indicator grid and show how
//! often a few indicators fire per class.

use indagg::prelude::*;

fn main() {
    let signals = generate_dataset(&DatasetConfig::new(Variant::A, 60, 20, 3));
    let grid = default_grid(Variant::A);
    println!("{} indicators", grid.len());
    let matrix = featurize(&signals, &grid);

    let ids = [
        "u/w30/p0.005/rate0.3/ovfull/raw",
        "f/w30/p0.005/rate0.3/ovfull/raw",
        "ks/wadapt/p0.005/k3of5/ovfull/smooth",
        "u/w50/p0.1/run0.5/ovfull/raw",
    ];
    println!("{:<40} {:>6} {:>8} {:>6} {:>6}", "indicator", "none", "variance", "mean", "trend");
    for id in ids {
        let spec: IndicatorSpec = id.parse().unwrap();
        let col = matrix.column(matrix.column_index(id).unwrap());
        let mut rate = [0.0; 4];
        let mut count = [0.0; 4];
        for (bit, label) in col.iter().zip(matrix.labels()) {
            rate[label.index()] += *bit as f64;
            count[label.index()] += 1.0;
        }
        print!("{:<40}", format!("{id} {}", spec.short_label()));
        for c in 0..4 {
            print!(" {:>6.2}", rate[c] / count[c]);
        }
        println!();
    }

    // A hand-built grid of one indicator.
    let spec: IndicatorSpec = "f/w50/p0.1/k2of3/ovfull/raw".parse().unwrap();
    let small = IndicatorGrid::new(vec![spec]).unwrap();
    let bits = evaluate_grid(&signals[0], &small);
    println!("\n{} on signal 0 ({}): {}", spec.id(), signals[0].label.name(), bits[0]);
}
