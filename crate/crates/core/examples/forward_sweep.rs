//! Accuracy as a function of the number of mRMR indicators, and the
//! subset size picked by training accuracy.

use indagg::prelude::*;

fn main() {
    let signals = generate_dataset(&DatasetConfig::new(Variant::B, 300, 100, 21));
    let matrix = featurize(&signals, &default_grid(Variant::B));
    let spec = SplitSpec { learn_per_class: 50, test_subsets: 4, subset_size: 100, seed: 21 };
    let s = split(matrix.labels(), &spec).unwrap();
    let learn = matrix.select_rows(&s.learn);
    let test = matrix.select_rows(&s.test);
    let ranking = mrmr_rank(&learn, 30);

    let sweep = forward_sweep(&learn, &test, &s.subsets, &ranking, 30, &ClassifierKind::NaiveBayes).unwrap();
    println!("{:>3} {:>7} {:>7}", "m", "train", "test");
    for r in &sweep.records {
        let bar = "*".repeat((r.test_mean_accuracy * 40.0) as usize);
        println!("{:>3} {:>7.3} {:>7.3} {bar}", r.n_indicators, r.train_accuracy, r.test_mean_accuracy);
    }
    let m = select_optimal(&sweep, 30).unwrap();
    println!("selected m = {m}: test {:.3}", sweep.record(m).unwrap().test_mean_accuracy);
}
