//! Rank indicators by minimum redundancy, maximum relevance.

use indagg::prelude::*;

fn main() {
    let signals = generate_dataset(&DatasetConfig::new(Variant::B, 150, 50, 11));
    let matrix = featurize(&signals, &default_grid(Variant::B));
    let ranking = mrmr_rank(&matrix, 15);
    println!("{:>4} {:<14} {:>9} {:>10} {:>8}  id", "rank", "label", "relevance", "redundancy", "score");
    for r in ranking.records() {
        let label = r
            .indicator_id
            .parse::<IndicatorSpec>()
            .map(|s| s.short_label())
            .unwrap_or_default();
        println!(
            "{:>4} {label:<14} {:>9.4} {:>10.4} {:>8.4}  {}",
            r.rank, r.relevance, r.redundancy, r.score, r.indicator_id
        );
    }
}
