//! Random Forest on binary features.
//!
//! Each tree is grown to purity on a bootstrap sample of the training
//! rows. At every node `mtry` columns are drawn without replacement and
//! the 0/1 split with the largest Gini decrease wins; a node with no
//! improving split among its candidates becomes a leaf.
//!
//! Tree `t` uses two streams derived from the forest seed: one for its
//! bootstrap draws and one for column sampling. Trees can therefore be
//! grown in any order (or in parallel) with identical results, and the
//! bootstrap of any tree can be replayed later.

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifyError, Prediction};
use crate::indicators::IndicatorMatrix;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate columns per node; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn resolve_mtry(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with bit 0 go to `zero`, bit 1 to `one` (node indices).
    Split { column: usize, zero: u32, one: u32 },
    /// Bootstrap class counts that reached the leaf.
    Leaf { counts: [u32; 4] },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

fn majority(counts: &[u32; 4]) -> usize {
    let mut best = 0;
    for c in 1..4 {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best
}

impl Tree {
    pub fn leaf_for(&self, bits: &[u8]) -> &[u32; 4] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split { column, zero, one } => {
                    at = if bits[*column] == 1 { *one } else { *zero } as usize;
                }
            }
        }
    }

    /// Majority class of the leaf reached by `bits`.
    pub fn predict_class(&self, bits: &[u8]) -> usize {
        majority(self.leaf_for(bits))
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { zero, one, .. } => {
                    1 + go(nodes, *zero as usize).max(go(nodes, *one as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub indicator_ids: Vec<String>,
    pub n_trees: usize,
    pub mtry: usize,
    pub seed: u64,
    /// Number of training rows (bootstrap size).
    pub n_train: usize,
    pub trees: Vec<Tree>,
    pub oob_accuracy: f64,
    /// Training rows left out of at least one bootstrap.
    pub oob_covered: usize,
}

/// Gini impurity times node size: `n - sum c^2 / n`.
fn weighted_gini(counts: &[u32; 4]) -> f64 {
    let n: u32 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    n - counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>() / n
}

fn class_counts(rows: &[u32], labels: &[usize]) -> [u32; 4] {
    let mut counts = [0u32; 4];
    for &r in rows {
        counts[labels[r as usize]] += 1;
    }
    counts
}

fn bootstrap(seed: u64, tree: usize, n: usize) -> Vec<u32> {
    let mut r = rng::tagged_stream(seed, rng::domain::TREE, 2 * tree as u64);
    (0..n).map(|_| r.random_range(0..n as u32)).collect()
}

struct Grower<'a> {
    matrix: &'a IndicatorMatrix,
    labels: &'a [usize],
    mtry: usize,
    rng: Rng,
}

impl Grower<'_> {
    fn grow(&mut self, mut rows: Vec<u32>) -> Tree {
        let mut nodes = vec![Node::Leaf { counts: [0; 4] }];
        // (node index, start, end) into `rows`
        let mut stack = vec![(0usize, 0usize, rows.len())];
        let p = self.matrix.n_cols();
        while let Some((at, start, end)) = stack.pop() {
            let slice = &mut rows[start..end];
            let counts = class_counts(slice, self.labels);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            if pure {
                nodes[at] = Node::Leaf { counts };
                continue;
            }
            let Some(column) = self.best_split(slice, &counts, p) else {
                nodes[at] = Node::Leaf { counts };
                continue;
            };
            // partition: bit 0 rows first
            let mut zeros: Vec<u32> = Vec::with_capacity(slice.len());
            let mut ones: Vec<u32> = Vec::with_capacity(slice.len());
            for &r in slice.iter() {
                if self.matrix.get(r as usize, column) == 1 {
                    ones.push(r);
                } else {
                    zeros.push(r);
                }
            }
            let mid = start + zeros.len();
            slice[..zeros.len()].copy_from_slice(&zeros);
            slice[zeros.len()..].copy_from_slice(&ones);

            let zero = nodes.len();
            nodes.push(Node::Leaf { counts: [0; 4] });
            let one = nodes.len();
            nodes.push(Node::Leaf { counts: [0; 4] });
            nodes[at] = Node::Split {
                column,
                zero: zero as u32,
                one: one as u32,
            };
            stack.push((one, mid, end));
            stack.push((zero, start, mid));
        }
        Tree { nodes }
    }

    fn best_split(&mut self, rows: &[u32], counts: &[u32; 4], p: usize) -> Option<usize> {
        let parent = weighted_gini(counts);
        let mut best: Option<(usize, f64)> = None;
        for j in index::sample(&mut self.rng, p, self.mtry) {
            let mut ones = [0u32; 4];
            for &r in rows {
                if self.matrix.get(r as usize, j) == 1 {
                    ones[self.labels[r as usize]] += 1;
                }
            }
            let n1: u32 = ones.iter().sum();
            if n1 == 0 || n1 as usize == rows.len() {
                continue;
            }
            let zeros = [
                counts[0] - ones[0],
                counts[1] - ones[1],
                counts[2] - ones[2],
                counts[3] - ones[3],
            ];
            let gain = parent - weighted_gini(&zeros) - weighted_gini(&ones);
            if gain > 1e-12 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        best.map(|(j, _)| j)
    }
}

/// Trains a forest and its out-of-bag accuracy.
pub fn rf_train(matrix: &IndicatorMatrix, params: &ForestParams) -> Result<ForestModel, ClassifyError> {
    if matrix.is_empty() {
        return Err(ClassifyError::EmptyMatrix);
    }
    if params.n_trees == 0 {
        return Err(ClassifyError::InvalidParameter("n_trees must be >= 1".into()));
    }
    let p = matrix.n_cols();
    let mtry = params.resolve_mtry(p);
    if mtry == 0 || mtry > p {
        return Err(ClassifyError::InvalidParameter(format!(
            "mtry {mtry} outside 1..={p}"
        )));
    }
    let n = matrix.n_rows();
    let labels: Vec<usize> = matrix.labels().iter().map(|l| l.index()).collect();

    let grown: Vec<(Tree, Vec<(u32, u8)>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let rows = bootstrap(params.seed, t, n);
            let mut in_bag = vec![false; n];
            for &r in &rows {
                in_bag[r as usize] = true;
            }
            let mut grower = Grower {
                matrix,
                labels: &labels,
                mtry,
                rng: rng::tagged_stream(params.seed, rng::domain::TREE, 2 * t as u64 + 1),
            };
            let tree = grower.grow(rows);
            let oob_votes = (0..n)
                .filter(|&i| !in_bag[i])
                .map(|i| (i as u32, tree.predict_class(matrix.row(i)) as u8))
                .collect();
            (tree, oob_votes)
        })
        .collect();

    let mut votes = vec![[0u32; 4]; n];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, oob) in grown {
        for (i, c) in oob {
            votes[i as usize][c as usize] += 1;
        }
        trees.push(tree);
    }
    let mut covered = 0usize;
    let mut correct = 0usize;
    for (i, v) in votes.iter().enumerate() {
        if v.iter().sum::<u32>() == 0 {
            continue;
        }
        covered += 1;
        if majority(v) == labels[i] {
            correct += 1;
        }
    }
    let oob_accuracy = if covered == 0 {
        0.0
    } else {
        correct as f64 / covered as f64
    };

    Ok(ForestModel {
        indicator_ids: matrix.columns().to_vec(),
        n_trees: params.n_trees,
        mtry,
        seed: params.seed,
        n_train: n,
        trees,
        oob_accuracy,
        oob_covered: covered,
    })
}

/// Vote fractions over the trees; ties go to the lower class code.
pub fn rf_predict(model: &ForestModel, bits: &[u8]) -> Result<Prediction, ClassifyError> {
    if bits.len() != model.indicator_ids.len() {
        return Err(ClassifyError::DimensionMismatch {
            expected: model.indicator_ids.len(),
            got: bits.len(),
        });
    }
    let mut votes = [0u32; 4];
    for tree in &model.trees {
        votes[tree.predict_class(bits)] += 1;
    }
    let total = model.trees.len() as f64;
    let scores = votes.map(|v| v as f64 / total);
    Ok(Prediction::from_scores(scores))
}

/// Mean decrease in Gini impurity per indicator, averaged over trees.
///
/// Each tree's bootstrap sample of `matrix` is replayed from the forest
/// seed and routed through the tree; every split credits its column with
/// `(n G(node) - n0 G(zero) - n1 G(one)) / n_train`. `matrix` must be the
/// training matrix (same rows and columns).
pub fn rf_variable_importance(
    model: &ForestModel,
    matrix: &IndicatorMatrix,
) -> Result<Vec<f64>, ClassifyError> {
    if matrix.columns() != model.indicator_ids.as_slice() {
        return Err(ClassifyError::ColumnMismatch(
            "importance needs the training columns".into(),
        ));
    }
    if matrix.n_rows() != model.n_train {
        return Err(ClassifyError::DimensionMismatch {
            expected: model.n_train,
            got: matrix.n_rows(),
        });
    }
    let labels: Vec<usize> = matrix.labels().iter().map(|l| l.index()).collect();
    let p = matrix.n_cols();
    let per_tree: Vec<Vec<f64>> = model
        .trees
        .par_iter()
        .enumerate()
        .map(|(t, tree)| {
            let mut node_counts = vec![[0u32; 4]; tree.nodes.len()];
            for r in bootstrap(model.seed, t, model.n_train) {
                let bits = matrix.row(r as usize);
                let mut at = 0usize;
                loop {
                    node_counts[at][labels[r as usize]] += 1;
                    match &tree.nodes[at] {
                        Node::Leaf { .. } => break,
                        Node::Split { column, zero, one } => {
                            at = if bits[*column] == 1 { *one } else { *zero } as usize;
                        }
                    }
                }
            }
            let mut imp = vec![0.0; p];
            for (k, node) in tree.nodes.iter().enumerate() {
                if let Node::Split { column, zero, one } = node {
                    let gain = weighted_gini(&node_counts[k])
                        - weighted_gini(&node_counts[*zero as usize])
                        - weighted_gini(&node_counts[*one as usize]);
                    imp[*column] += gain.max(0.0) / model.n_train as f64;
                }
            }
            imp
        })
        .collect();
    let mut total = vec![0.0; p];
    for imp in per_tree {
        for (a, b) in total.iter_mut().zip(imp) {
            *a += b;
        }
    }
    let k = model.trees.len() as f64;
    Ok(total.into_iter().map(|v| v / k).collect())
}

impl ForestModel {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: String| Err(ClassifyError::MalformedModel(m));
        if self.trees.len() != self.n_trees {
            return bad(format!("{} trees, header says {}", self.trees.len(), self.n_trees));
        }
        if !(0.0..=1.0).contains(&self.oob_accuracy) {
            return bad(format!("oob accuracy {}", self.oob_accuracy));
        }
        let p = self.indicator_ids.len();
        for (t, tree) in self.trees.iter().enumerate() {
            if tree.nodes.is_empty() {
                return bad(format!("tree {t} has no nodes"));
            }
            for node in &tree.nodes {
                if let Node::Split { column, zero, one } = node {
                    let n = tree.nodes.len() as u32;
                    if *column >= p || *zero >= n || *one >= n {
                        return bad(format!("tree {t} references a missing column or node"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Classifier for ForestModel {
    fn indicator_ids(&self) -> &[String] {
        &self.indicator_ids
    }

    fn predict(&self, bits: &[u8]) -> Result<Prediction, ClassifyError> {
        rf_predict(self, bits)
    }

    fn oob_accuracy(&self) -> Option<f64> {
        Some(self.oob_accuracy)
    }
}
