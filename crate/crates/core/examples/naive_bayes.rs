//! Bernoulli Naive Bayes on the top mRMR indicators: class-conditional
//! probabilities, a posterior and the confusion matrix.

use indagg::prelude::*;

fn main() {
    let signals = generate_dataset(&DatasetConfig::new(Variant::A, 300, 100, 5));
    let matrix = featurize(&signals, &default_grid(Variant::A));
    let spec = SplitSpec { learn_per_class: 50, test_subsets: 4, subset_size: 100, seed: 5 };
    let s = split(matrix.labels(), &spec).unwrap();
    let learn = matrix.select_rows(&s.learn);
    let test = matrix.select_rows(&s.test);

    let ranking = mrmr_rank(&learn, 10);
    let learn = learn.select_columns_by_id(&ranking.ordered_ids).unwrap();
    let test = test.select_columns_by_id(&ranking.ordered_ids).unwrap();
    let model = nb_train(&learn).unwrap();

    for row in conditional_probability_report(&model, &ranking.ordered_ids).unwrap() {
        println!(
            "{:>3} {:<14} {:.3} {:.3} {:.3} {:.3}",
            row.rank, row.short_label, row.probs[0], row.probs[1], row.probs[2], row.probs[3]
        );
    }

    let p = nb_predict(&model, test.row(0)).unwrap();
    println!(
        "\nfirst test signal: true {}, predicted {}, posterior {:.3?}",
        test.labels()[0].name(),
        p.label.name(),
        p.per_class_score
    );

    let report = evaluate(&model, &learn, &test, &s.subsets).unwrap();
    println!(
        "train {:.3}, test {:.3} (sd {:.3})",
        report.train_accuracy, report.test_mean_accuracy, report.test_accuracy_sd
    );
    for (c, row) in report.confusion.iter().enumerate() {
        println!("  {:<15} {row:?}", ClassLabel::ALL[c].name());
    }
}
