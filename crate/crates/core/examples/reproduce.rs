//! The whole experiment on one data set: simulation, featurization,
//! split, both classifiers, sweeps, selection and the probability table.
//!
//! ```text
//! cargo run --release --example reproduce -- [a|b] [--full]
//! ```
//!
//! Without `--full` the corpus and forest are scaled down tenfold.

use indagg::eval::{run_protocol, ProtocolConfig};
use indagg::sim::Variant;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let variant: Variant = args
        .iter()
        .find(|a| !a.starts_with("--"))
        .map_or(Variant::A, |a| a.parse().expect("variant a or b"));
    let seed = if variant == Variant::A { 1 } else { 2 };
    let mut cfg = ProtocolConfig::full(variant, seed);
    cfg.forest_counts = vec![10, 30, 100];
    if !args.iter().any(|a| a == "--full") {
        cfg.n_normal = 300;
        cfg.n_per_anomaly = 100;
        cfg.learn_per_class = 50;
        cfg.subset_size = 100;
        cfg.test_subsets = 4;
        cfg.n_trees = 100;
    }
    let outcome = run_protocol(&cfg).expect("protocol");
    print!("{}", outcome.summary());
}
