//! Generate a small corpus of both variants and summarize it.
//!
//! ```text
//! cargo run --example simulate -- [out.jsonl]
//! ```

use std::fs::File;
use std::io::BufWriter;

use indagg::prelude::*;
use indagg::sim::{class_histogram, write_dataset};

fn main() -> std::io::Result<()> {
    for variant in [Variant::A, Variant::B] {
        let signals = generate_dataset(&DatasetConfig::new(variant, 30, 10, 42));
        let hist = class_histogram(signals.iter().map(|s| &s.label));
        println!("set {variant}: {} signals, per class {hist:?}", signals.len());
        for label in ClassLabel::ALL {
            let first = signals.iter().find(|s| s.label == label).unwrap();
            let mean = first.values.iter().sum::<f64>() / first.len() as f64;
            println!(
                "  {:<15} n={:<3} change point {:>4} shift {:>7} mean {mean:+.3}",
                label.name(),
                first.len(),
                first.change_point.map_or("-".into(), |k| k.to_string()),
                first.shift_param.map_or("-".into(), |x| format!("{x:.3}")),
            );
        }
    }

    if let Some(path) = std::env::args().nth(1) {
        let signals = generate_dataset(&DatasetConfig::new(Variant::A, 30, 10, 42));
        write_dataset(BufWriter::new(File::create(&path)?), &signals)?;
        println!("wrote {path}");
    }
    Ok(())
}
