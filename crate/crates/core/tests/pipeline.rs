use indagg::classify::{nb_predict, nb_train, ClassifierKind, ForestParams};
use indagg::eval::{evaluate, forward_sweep, split, SplitSpec};
use indagg::features::mrmr_rank;
use indagg::indicators::IndicatorMatrix;
use indagg::sim::ClassLabel;
use proptest::prelude::*;

fn matrix(labels: Vec<ClassLabel>, p: usize, bits: Vec<u8>) -> IndicatorMatrix {
    let n = labels.len();
    IndicatorMatrix::new(
        (0..n as u64).collect(),
        labels,
        (0..p).map(|j| format!("x{j}")).collect(),
        bits,
    )
    .unwrap()
}

/// Rows with every class present; bits loosely tied to the class.
fn corpus() -> impl Strategy<Value = IndicatorMatrix> {
    (1usize..8, 40usize..200).prop_flat_map(|(p, n)| {
        let rows = proptest::collection::vec((0u8..4, proptest::collection::vec(0.0f64..1.0, p)), n);
        let lean = proptest::collection::vec(proptest::array::uniform4(0.05f64..0.95), p);
        (rows, lean).prop_map(move |(rows, lean)| {
            let mut labels: Vec<ClassLabel> = rows.iter().map(|(c, _)| ClassLabel::ALL[*c as usize]).collect();
            labels[..4].copy_from_slice(&ClassLabel::ALL);
            let bits = labels
                .iter()
                .zip(&rows)
                .flat_map(|(l, (_, u))| {
                    u.iter()
                        .zip(&lean)
                        .map(|(u, t)| (*u < t[l.index()]) as u8)
                        .collect::<Vec<_>>()
                })
                .collect();
            matrix(labels, p, bits)
        })
    })
}

fn all_patterns(p: usize) -> Vec<Vec<u8>> {
    (0..1u32 << p)
        .map(|m| (0..p).map(|j| ((m >> j) & 1) as u8).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nb_training_on_doubled_data(m in corpus()) {
        let doubled_rows: Vec<usize> = (0..m.n_rows()).chain(0..m.n_rows()).collect();
        let doubled = m.select_rows(&doubled_rows);
        let once = nb_train(&m).unwrap();
        let twice = nb_train(&doubled).unwrap();
        prop_assert_eq!(once.class_priors, twice.class_priors);
        let hist = indagg::sim::class_histogram(m.labels());
        for j in 0..m.n_cols() {
            for c in 0..4 {
                let k = (0..m.n_rows()).filter(|&i| m.labels()[i].index() == c && m.get(i, j) == 1).count();
                let expect = (2 * k + 1) as f64 / (2 * hist[c] + 2) as f64;
                prop_assert!((twice.theta[j][c] - expect).abs() < 1e-15);
            }
        }
        // Smoothing moves any class log-likelihood by at most `shift`, so
        // the argmax is stable once the log margin exceeds twice that.
        let shift = (0..4)
            .map(|c| {
                (0..m.n_cols())
                    .map(|j| {
                        let (t, u) = (once.theta[j][c], twice.theta[j][c]);
                        (t.ln() - u.ln()).abs().max(((1.0 - t).ln() - (1.0 - u).ln()).abs())
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        for bits in all_patterns(m.n_cols()) {
            let a = nb_predict(&once, &bits).unwrap();
            let mut sorted = a.per_class_score;
            sorted.sort_by(|x, y| y.total_cmp(x));
            if sorted[0].ln() - sorted[1].ln() > 2.0 * shift + 1e-9 {
                prop_assert_eq!(a.label, nb_predict(&twice, &bits).unwrap().label);
            }
        }
    }

    #[test]
    fn nb_ignores_column_order(m in corpus(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..m.n_cols()).collect();
        order.shuffle(&mut indagg::rng::stream(seed, 0));
        let permuted = m.select_columns(&order);
        let a = nb_train(&m).unwrap();
        let b = nb_train(&permuted).unwrap();
        for bits in all_patterns(m.n_cols()) {
            let moved: Vec<u8> = order.iter().map(|&j| bits[j]).collect();
            let pa = nb_predict(&a, &bits).unwrap();
            let pb = nb_predict(&b, &moved).unwrap();
            prop_assert_eq!(pa.label, pb.label);
            for c in 0..4 {
                prop_assert!((pa.per_class_score[c] - pb.per_class_score[c]).abs() < 1e-12);
            }
        }
    }
}

/// Two-class corpus (none vs mean shift) where column 0 is the label and
/// the rest are coins.
fn perfect_first_column() -> IndicatorMatrix {
    let n = 400;
    let mut r = indagg::rng::stream(3, 0);
    let labels: Vec<ClassLabel> = (0..n)
        .map(|i| if i % 2 == 0 { ClassLabel::None } else { ClassLabel::MeanShift })
        .collect();
    let bits = labels
        .iter()
        .flat_map(|l| {
            let mut row = vec![(*l != ClassLabel::None) as u8];
            row.extend((0..5).map(|_| rand::Rng::random_bool(&mut r, 0.5) as u8));
            row
        })
        .collect();
    matrix(labels, 6, bits)
}

#[test]
fn sweep_with_one_perfect_feature_is_exact_at_m1() {
    let m = perfect_first_column();
    let learn = m.select_rows(&(0..200).collect::<Vec<_>>());
    let test = m.select_rows(&(200..400).collect::<Vec<_>>());
    let ranking = mrmr_rank(&learn, 3);
    assert_eq!(ranking.top(1), ["x0"]);
    let kind = ClassifierKind::Forest(ForestParams { n_trees: 50, mtry: None, seed: 4 });
    let sweep = forward_sweep(&learn, &test, &[(0..200).collect()], &ranking, 3, &kind).unwrap();
    let at1 = sweep.record(1).unwrap();
    assert_eq!(at1.test_full_accuracy, 1.0);
    assert_eq!(at1.train_accuracy, 1.0);
    assert_eq!(at1.test_subset_accuracies, [1.0]);
    assert_eq!(at1.confusion[0][2] + at1.confusion[2][0], 0);
}

#[test]
fn balanced_split_feeds_evaluation() {
    let m = perfect_first_column();
    let s = split(
        m.labels(),
        &SplitSpec { learn_per_class: 50, test_subsets: 2, subset_size: 40, seed: 8 },
    );
    // two classes are empty, so a four-class balanced split cannot exist
    assert!(s.is_err());

    let learn = m.select_rows(&(0..100).collect::<Vec<_>>());
    let test = m.select_rows(&(100..400).collect::<Vec<_>>());
    let model = indagg::classify::nb_train_classes(&learn, &[ClassLabel::None, ClassLabel::MeanShift]).unwrap();
    let report = evaluate(&model, &learn, &test, &[(0..300).collect()]).unwrap();
    assert!(report.test_full_accuracy > 0.9);
    let diag: u64 = (0..4).map(|c| report.confusion[c][c]).sum();
    assert_eq!(diag as f64 / 300.0, report.test_full_accuracy);
}
