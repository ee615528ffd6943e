//! Random forest of CART trees grown with Gini impurity on bootstrap samples.
//!
//! Tree `t` draws everything (its bootstrap sample, then its candidate
//! features at every node) from a ChaCha stream keyed by `(seed, t)`, so a
//! forest is identical whether trees are grown sequentially or in parallel.
//!
//! Split quality is compared in exact integer arithmetic: minimizing the
//! weighted child Gini is the same as maximizing
//! `(p_l^2 + q_l^2) / n_l + (p_r^2 + q_r^2) / n_r` over class counts, so ties
//! are detected exactly and broken toward the lowest feature index, then the
//! lowest threshold.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ForestError {
    #[error("training set is empty")]
    Empty,
    #[error("training set has a single class")]
    SingleClass,
    #[error("feature values must be finite")]
    NonFinite,
    #[error("labels must be -1 or +1, got {0}")]
    InvalidLabel(f64),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        positive_fraction: f64,
        sample_count: usize,
    },
}

impl TreeNode {
    /// Routes `x` (`x[feature] <= threshold` goes left) to its leaf.
    pub fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut node = self;
        while let TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } = node
        {
            node = if x[*feature] <= *threshold {
                left
            } else {
                right
            };
        }
        node
    }

    pub fn positive_fraction(&self, x: &[f64]) -> f64 {
        match self.leaf_for(x) {
            TreeNode::Leaf {
                positive_fraction, ..
            } => *positive_fraction,
            TreeNode::Split { .. } => unreachable!("leaf_for always ends at a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        match self {
            TreeNode::Leaf { .. } => vec![self],
            TreeNode::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

/// Forest hyperparameters. `mtry = None` means `ceil(sqrt(dim))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            mtry: None,
            min_leaf: 1,
            max_depth: None,
        }
    }
}

impl ForestParams {
    pub fn mtry_for(&self, dim: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<TreeNode>,
    mtry: usize,
    seed: u64,
    dim: usize,
}

impl ForestModel {
    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn mtry(&self) -> usize {
        self.mtry
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mean over trees of the reached leaf's positive fraction.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ForestError> {
        if x.len() != self.dim {
            return Err(ForestError::LengthMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let total: f64 = self.trees.iter().map(|t| t.positive_fraction(x)).sum();
        Ok(total / self.trees.len() as f64)
    }
}

pub fn predict_proba_forest(model: &ForestModel, x: &[f64]) -> Result<f64, ForestError> {
    model.predict_proba(x)
}

fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut r = rng::seeded(seed);
    r.set_stream(tree_index as u64);
    r
}

fn draw_bootstrap(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// The bootstrap sample (with replacement, size `n`) used by tree `tree_index`.
pub fn bootstrap_indices(seed: u64, tree_index: usize, n: usize) -> Vec<usize> {
    draw_bootstrap(&mut tree_rng(seed, tree_index), n)
}

fn validate<R: AsRef<[f64]>>(x: &[R], y: &[f64]) -> Result<usize, ForestError> {
    if x.is_empty() {
        return Err(ForestError::Empty);
    }
    if x.len() != y.len() {
        return Err(ForestError::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let dim = x[0].as_ref().len();
    if dim == 0 {
        return Err(ForestError::InvalidParameter(
            "feature dimension is zero".into(),
        ));
    }
    for row in x {
        let row = row.as_ref();
        if row.len() != dim {
            return Err(ForestError::LengthMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ForestError::NonFinite);
        }
    }
    if let Some(&bad) = y.iter().find(|&&l| l != 1.0 && l != -1.0) {
        return Err(ForestError::InvalidLabel(bad));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(ForestError::SingleClass);
    }
    Ok(dim)
}

/// Trains `n_trees` trees with `mtry` candidate features per node.
pub fn train_forest<R: AsRef<[f64]> + Sync>(
    x: &[R],
    y: &[f64],
    n_trees: usize,
    mtry: usize,
    min_leaf: usize,
    seed: u64,
) -> Result<ForestModel, ForestError> {
    let params = ForestParams {
        n_trees,
        mtry: Some(mtry),
        min_leaf,
        max_depth: None,
    };
    train_forest_with(x, y, &params, seed)
}

pub fn train_forest_with<R: AsRef<[f64]> + Sync>(
    x: &[R],
    y: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel, ForestError> {
    let dim = validate(x, y)?;
    let mtry = params.mtry_for(dim);
    if mtry > dim {
        return Err(ForestError::InvalidParameter(format!(
            "mtry {mtry} exceeds feature dimension {dim}"
        )));
    }
    if params.n_trees == 0 || params.min_leaf == 0 {
        return Err(ForestError::InvalidParameter(
            "n_trees and min_leaf must be positive".into(),
        ));
    }
    let grower = Grower {
        x,
        positive: y.iter().map(|&l| l > 0.0).collect(),
        dim,
        mtry,
        min_leaf: params.min_leaf,
        max_depth: params.max_depth.unwrap_or(usize::MAX),
    };
    let grow = |t: usize| {
        let mut r = tree_rng(seed, t);
        let sample = draw_bootstrap(&mut r, x.len());
        grower.grow(sample, 0, &mut r)
    };
    #[cfg(feature = "parallel")]
    let trees = {
        use rayon::prelude::*;
        (0..params.n_trees).into_par_iter().map(grow).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trees = (0..params.n_trees).map(grow).collect();
    Ok(ForestModel {
        trees,
        mtry,
        seed,
        dim,
    })
}

struct Grower<'a, R> {
    x: &'a [R],
    positive: Vec<bool>,
    dim: usize,
    mtry: usize,
    min_leaf: usize,
    max_depth: usize,
}

/// Exact fraction `num / den` with `den > 0`.
#[derive(Clone, Copy)]
struct Ratio {
    num: u128,
    den: u128,
}

impl Ratio {
    fn greater_than(self, other: Ratio) -> bool {
        self.num * other.den > other.num * self.den
    }
}

fn purity_score(pos: u128, neg: u128) -> Ratio {
    // (p^2 + q^2) / n for one node
    Ratio {
        num: pos * pos + neg * neg,
        den: pos + neg,
    }
}

fn split_score(lp: u128, ln: u128, rp: u128, rn: u128) -> Ratio {
    let (nl, nr) = (lp + ln, rp + rn);
    Ratio {
        num: (lp * lp + ln * ln) * nr + (rp * rp + rn * rn) * nl,
        den: nl * nr,
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: Ratio,
}

impl<R: AsRef<[f64]>> Grower<'_, R> {
    fn value(&self, i: usize, f: usize) -> f64 {
        self.x[i].as_ref()[f]
    }

    fn leaf(&self, sample: &[usize]) -> TreeNode {
        let pos = sample.iter().filter(|&&i| self.positive[i]).count();
        TreeNode::Leaf {
            positive_fraction: pos as f64 / sample.len() as f64,
            sample_count: sample.len(),
        }
    }

    fn grow(&self, sample: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> TreeNode {
        let n = sample.len();
        let pos = sample.iter().filter(|&&i| self.positive[i]).count();
        if pos == 0 || pos == n || n < 2 * self.min_leaf || depth >= self.max_depth {
            return self.leaf(&sample);
        }
        let mut features = index::sample(rng, self.dim, self.mtry).into_vec();
        features.sort_unstable();

        let mut best: Option<BestSplit> = None;
        let mut sorted = sample.clone();
        for &f in &features {
            sorted.sort_by(|&a, &b| self.value(a, f).total_cmp(&self.value(b, f)));
            let (mut lp, mut ln) = (0u128, 0u128);
            let (tp, tn) = (pos as u128, (n - pos) as u128);
            for k in 0..n - 1 {
                if self.positive[sorted[k]] {
                    lp += 1;
                } else {
                    ln += 1;
                }
                let (lo, hi) = (self.value(sorted[k], f), self.value(sorted[k + 1], f));
                if lo == hi || k + 1 < self.min_leaf || n - k - 1 < self.min_leaf {
                    continue;
                }
                let score = split_score(lp, ln, tp - lp, tn - ln);
                if best.as_ref().is_none_or(|b| score.greater_than(b.score)) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }

        let parent = purity_score(pos as u128, (n - pos) as u128);
        match best {
            Some(b) if b.score.greater_than(parent) => {
                let (left, right): (Vec<usize>, Vec<usize>) = sample
                    .iter()
                    .partition(|&&i| self.value(i, b.feature) <= b.threshold);
                TreeNode::Split {
                    feature: b.feature,
                    threshold: b.threshold,
                    left: Box::new(self.grow(left, depth + 1, rng)),
                    right: Box::new(self.grow(right, depth + 1, rng)),
                }
            }
            _ => self.leaf(&sample),
        }
    }
}

/// Out-of-bag accuracy on the training data the forest was grown on:
/// each sample is voted on only by trees whose bootstrap missed it.
/// Returns `None` when no sample was ever out of bag.
pub fn oob_accuracy<R: AsRef<[f64]>>(model: &ForestModel, x: &[R], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for (t, tree) in model.trees.iter().enumerate() {
        let mut in_bag = vec![false; n];
        for i in bootstrap_indices(model.seed, t, n) {
            in_bag[i] = true;
        }
        for i in (0..n).filter(|&i| !in_bag[i]) {
            sums[i] += tree.positive_fraction(x[i].as_ref());
            counts[i] += 1;
        }
    }
    let (mut correct, mut total) = (0usize, 0usize);
    for i in (0..n).filter(|&i| counts[i] > 0) {
        let predicted_positive = sums[i] / counts[i] as f64 >= 0.5;
        if predicted_positive == (y[i] > 0.0) {
            correct += 1;
        }
        total += 1;
    }
    (total > 0).then(|| correct as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn separable_1d() -> (Vec<[f64; 1]>, Vec<f64>) {
        let x: Vec<[f64; 1]> = (0..20).map(|i| [i as f64 - 9.5]).collect();
        let y = x
            .iter()
            .map(|p| if p[0] > 0.0 { 1.0 } else { -1.0 })
            .collect();
        (x, y)
    }

    #[test]
    fn stump_on_separable_data() {
        let (x, y) = separable_1d();
        let m = train_forest(&x, &y, 1, 1, 1, 5).unwrap();
        let tree = &m.trees()[0];
        assert_eq!(tree.depth(), 1);
        match tree {
            TreeNode::Split { threshold, .. } => assert!(threshold.abs() < 9.5),
            _ => panic!("expected a split"),
        }
        assert_eq!(m.predict_proba(&[100.0]).unwrap(), 1.0);
        assert_eq!(m.predict_proba(&[-100.0]).unwrap(), 0.0);
        for leaf in tree.leaves() {
            if let TreeNode::Leaf {
                positive_fraction, ..
            } = leaf
            {
                assert!(*positive_fraction == 0.0 || *positive_fraction == 1.0);
            }
        }
    }

    #[test]
    fn vote_fraction_is_mean_of_leaves() {
        let stump = |frac: f64| TreeNode::Leaf {
            positive_fraction: frac,
            sample_count: 1,
        };
        let mut trees = vec![stump(1.0); 300];
        trees.extend(vec![stump(0.0); 200]);
        let m = ForestModel {
            trees,
            mtry: 1,
            seed: 0,
            dim: 1,
        };
        assert_abs_diff_eq!(m.predict_proba(&[0.0]).unwrap(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_and_validated() {
        let (x, y) = separable_1d();
        let a = train_forest(&x, &y, 20, 1, 1, 9).unwrap();
        let b = train_forest(&x, &y, 20, 1, 1, 9).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            train_forest(&x, &y, 1, 2, 1, 0),
            Err(ForestError::InvalidParameter(_))
        ));
        assert_eq!(
            train_forest(&x, &[1.0; 20], 1, 1, 1, 0),
            Err(ForestError::SingleClass)
        );
        assert!(matches!(
            a.predict_proba(&[1.0, 2.0]),
            Err(ForestError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn bootstrap_matches_training_stream() {
        let (x, y) = separable_1d();
        let m = train_forest(&x, &y, 3, 1, 1, 4).unwrap();
        for (t, tree) in m.trees().iter().enumerate() {
            let sample = bootstrap_indices(4, t, x.len());
            let total: usize = tree
                .leaves()
                .iter()
                .map(|l| match l {
                    TreeNode::Leaf { sample_count, .. } => *sample_count,
                    _ => 0,
                })
                .sum();
            assert_eq!(total, sample.len());
        }
    }

    #[test]
    fn min_leaf_is_respected() {
        let (x, y) = separable_1d();
        let m = train_forest(&x, &y, 10, 1, 4, 2).unwrap();
        for tree in m.trees() {
            for leaf in tree.leaves() {
                if let TreeNode::Leaf { sample_count, .. } = leaf {
                    assert!(*sample_count >= 4);
                }
            }
        }
    }
}
