//! Random forest on the full grid: out-of-bag accuracy, test accuracy and
//! the most important indicators.

use indagg::prelude::*;

fn main() {
    let signals = generate_dataset(&DatasetConfig::new(Variant::A, 300, 100, 9));
    let matrix = featurize(&signals, &default_grid(Variant::A));
    let spec = SplitSpec { learn_per_class: 50, test_subsets: 4, subset_size: 100, seed: 9 };
    let s = split(matrix.labels(), &spec).unwrap();
    let learn = matrix.select_rows(&s.learn);
    let test = matrix.select_rows(&s.test);

    let params = ForestParams { n_trees: 200, ..ForestParams::with_seed(9) };
    let forest = rf_train(&learn, &params).unwrap();
    println!(
        "{} trees, mtry {}, oob accuracy {:.3} ({} rows covered)",
        forest.n_trees, forest.mtry, forest.oob_accuracy, forest.oob_covered
    );
    let report = evaluate(&forest, &learn, &test, &s.subsets).unwrap();
    println!("test {:.3} (sd {:.3})", report.test_mean_accuracy, report.test_accuracy_sd);

    let importance = rf_variable_importance(&forest, &learn).unwrap();
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]));
    for &j in &order[..10] {
        println!("{:>8.5}  {}", importance[j], forest.indicator_ids[j]);
    }
}
