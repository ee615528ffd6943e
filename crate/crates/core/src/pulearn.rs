//! Iterative reliable-negative mining.
//!
//! Iteration 0 trains on the positive training set P plus |P| examples drawn
//! at random from the unlabeled pool. Every iteration k then
//!
//! 1. trains a model on P ∪ N^k,
//! 2. measures its accuracy on the all-positive validation set V,
//! 3. scores the test pool T^k, and
//! 4. takes the |P| lowest-scoring pairs of T^k as N^{k+1}.
//!
//! In inductive mode T^k = Unlabeled − N^k; in transductive mode
//! T^k = Unlabeled. The classifier seed for an iteration is derived from the
//! run seed and the content of its training set, so an iteration that
//! reproduces the previous negative set reproduces its model exactly.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{DataError, DatasetSplit, ExpressionMatrix, InteractionPair};
use crate::features::build_design;
use crate::forest::{train_forest_with, ForestError, ForestModel, ForestParams};
use crate::rng::{self, StableHasher};
use crate::svm::{train_svm, SvmError, SvmModel, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearningMode {
    Inductive,
    Transductive,
}

impl std::str::FromStr for LearningMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inductive" => Ok(LearningMode::Inductive),
            "transductive" => Ok(LearningMode::Transductive),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

impl std::fmt::Display for LearningMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LearningMode::Inductive => "inductive",
            LearningMode::Transductive => "transductive",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ClassifierError {
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PuError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("need at least {needed} unlabeled pairs, have {available}")]
    InsufficientUnlabeled { needed: usize, available: usize },
    #[error("negative set is not a subset of the unlabeled set")]
    NegativesNotSubset,
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("cannot select {count} pairs from {available}")]
    CountExceeds { count: usize, available: usize },
    #[error("iteration {iteration}: {source}")]
    Training {
        iteration: usize,
        source: ClassifierError,
    },
}

/// Anything that maps a feature vector to P(positive).
pub trait Scorer {
    fn predict_proba(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> Scorer for F {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// A training procedure for a probabilistic binary classifier. Labels are ±1.
pub trait Learner {
    type Model: Scorer + Sync;

    fn fit(&self, x: &[&[f64]], y: &[f64], seed: u64) -> Result<Self::Model, ClassifierError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Svm(SvmParams),
    #[serde(rename = "rf")]
    Forest(ForestParams),
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Svm(_) => "svm",
            ClassifierSpec::Forest(_) => "rf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Svm(SvmModel),
    Forest(ForestModel),
}

impl Scorer for TrainedModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        // feature lengths are fixed by the design matrix, so a mismatch is a bug
        match self {
            TrainedModel::Svm(m) => m.predict_proba(x).expect("feature length"),
            TrainedModel::Forest(m) => m.predict_proba(x).expect("feature length"),
        }
    }
}

impl Learner for ClassifierSpec {
    type Model = TrainedModel;

    fn fit(&self, x: &[&[f64]], y: &[f64], seed: u64) -> Result<TrainedModel, ClassifierError> {
        Ok(match self {
            ClassifierSpec::Svm(p) => TrainedModel::Svm(train_svm(x, y, p, seed)?),
            ClassifierSpec::Forest(p) => TrainedModel::Forest(train_forest_with(x, y, p, seed)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: LearningMode,
    pub classifier: ClassifierSpec,
    /// Number of refinement iterations K; the trace has K + 1 states.
    pub iterations: usize,
    pub seed: u64,
    /// Validation pairs with probability at or above this count as correct.
    pub threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: LearningMode::Transductive,
            classifier: ClassifierSpec::Svm(SvmParams::default()),
            iterations: 15,
            seed: 0,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub k: usize,
    /// N^k.
    pub negatives: BTreeSet<InteractionPair>,
    /// Unlabeled pairs added to the positive training pool (bootstrap mode only).
    pub promoted: BTreeSet<InteractionPair>,
    /// T^k.
    pub test_set: BTreeSet<InteractionPair>,
    pub accuracy: f64,
    pub scores: BTreeMap<InteractionPair, f64>,
    pub model_seed: u64,
}

impl IterationState {
    /// Equality of everything except the iteration index.
    pub fn same_outcome(&self, other: &IterationState) -> bool {
        self.negatives == other.negatives
            && self.promoted == other.promoted
            && self.test_set == other.test_set
            && self.accuracy == other.accuracy
            && self.scores == other.scores
            && self.model_seed == other.model_seed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub config: RunConfig,
    pub states: Vec<IterationState>,
}

impl IterationTrace {
    pub fn accuracies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.accuracy).collect()
    }

    pub fn final_state(&self) -> &IterationState {
        self.states.last().expect("a trace has at least one state")
    }

    /// First k with N^{k+1} = N^k, if any.
    pub fn fixpoint(&self) -> Option<usize> {
        self.states
            .windows(2)
            .find(|w| w[0].negatives == w[1].negatives && w[0].promoted == w[1].promoted)
            .map(|w| w[0].k)
    }
}

/// Uniform random subset of `size` unlabeled pairs.
pub fn initial_negatives(
    unlabeled: &BTreeSet<InteractionPair>,
    size: usize,
    seed: u64,
) -> Result<BTreeSet<InteractionPair>, PuError> {
    if size > unlabeled.len() {
        return Err(PuError::CountExceeds {
            count: size,
            available: unlabeled.len(),
        });
    }
    let all: Vec<&InteractionPair> = unlabeled.iter().collect();
    Ok(index::sample(&mut rng::seeded(seed), all.len(), size)
        .into_iter()
        .map(|i| all[i].clone())
        .collect())
}

pub fn build_test_set(
    mode: LearningMode,
    unlabeled: &BTreeSet<InteractionPair>,
    negatives: &BTreeSet<InteractionPair>,
) -> Result<BTreeSet<InteractionPair>, PuError> {
    if !negatives.is_subset(unlabeled) {
        return Err(PuError::NegativesNotSubset);
    }
    Ok(match mode {
        LearningMode::Inductive => unlabeled.difference(negatives).cloned().collect(),
        LearningMode::Transductive => unlabeled.clone(),
    })
}

/// Fraction of the validation pairs scored at or above `threshold`.
pub fn evaluate_validation<S: Scorer + ?Sized>(
    model: &S,
    validation: &BTreeSet<InteractionPair>,
    matrix: &ExpressionMatrix,
    threshold: f64,
) -> Result<f64, PuError> {
    if validation.is_empty() {
        return Err(PuError::EmptyValidation);
    }
    let design = build_design(validation, matrix)?;
    let rows: Vec<&[f64]> = design.iter().map(|f| f.values.as_slice()).collect();
    Ok(accuracy_on(model, &rows, threshold))
}

fn accuracy_on<S: Scorer + ?Sized>(model: &S, rows: &[&[f64]], threshold: f64) -> f64 {
    let hits = rows
        .iter()
        .filter(|x| model.predict_proba(x) >= threshold)
        .count();
    hits as f64 / rows.len() as f64
}

fn ranked(
    scores: &BTreeMap<InteractionPair, f64>,
    descending: bool,
) -> Vec<(&InteractionPair, f64)> {
    let mut v: Vec<_> = scores.iter().map(|(p, &s)| (p, s)).collect();
    v.sort_by(|a, b| {
        let by_score = if descending {
            b.1.total_cmp(&a.1)
        } else {
            a.1.total_cmp(&b.1)
        };
        by_score.then_with(|| a.0.cmp(b.0))
    });
    v
}

/// The `count` pairs with the lowest probability; ties go to the
/// lexicographically smaller (tf, target).
pub fn select_reliable_negatives(
    scores: &BTreeMap<InteractionPair, f64>,
    count: usize,
) -> Result<BTreeSet<InteractionPair>, PuError> {
    if count > scores.len() {
        return Err(PuError::CountExceeds {
            count,
            available: scores.len(),
        });
    }
    Ok(ranked(scores, false)
        .into_iter()
        .take(count)
        .map(|(p, _)| p.clone())
        .collect())
}

/// The `count` pairs with the highest probability, same tie rule.
pub fn select_top_positives(
    scores: &BTreeMap<InteractionPair, f64>,
    count: usize,
) -> Result<BTreeSet<InteractionPair>, PuError> {
    if count > scores.len() {
        return Err(PuError::CountExceeds {
            count,
            available: scores.len(),
        });
    }
    Ok(ranked(scores, true)
        .into_iter()
        .take(count)
        .map(|(p, _)| p.clone())
        .collect())
}

const INITIAL_SALT: u64 = 0x4e30;

fn training_seed(
    run_seed: u64,
    negatives: &BTreeSet<InteractionPair>,
    promoted: &BTreeSet<InteractionPair>,
) -> u64 {
    let mut h = StableHasher::default();
    for p in negatives {
        h.write_str(&p.tf);
        h.write_str(&p.target);
    }
    h.write(&[0]);
    for p in promoted {
        h.write_str(&p.tf);
        h.write_str(&p.target);
    }
    rng::derive_seed(run_seed, h.finish())
}

/// Runs iterations 0..=K with the classifier named in `config`.
pub fn run_iterations(
    split: &DatasetSplit,
    matrix: &ExpressionMatrix,
    config: &RunConfig,
) -> Result<IterationTrace, PuError> {
    run_with_learner(split, matrix, config, &config.classifier, 0)
}

/// Like [`run_iterations`], but every iteration also promotes the
/// `positive_count` highest-scoring test pairs into the positive training
/// pool of the next iteration. Promoted pairs are excluded from that
/// iteration's negative selection. V is never modified.
pub fn run_pn_bootstrap(
    split: &DatasetSplit,
    matrix: &ExpressionMatrix,
    config: &RunConfig,
    positive_count: usize,
) -> Result<IterationTrace, PuError> {
    run_with_learner(split, matrix, config, &config.classifier, positive_count)
}

/// The iteration engine with an arbitrary learner. `config.classifier` is
/// recorded in the trace but not used for training.
pub fn run_with_learner<L>(
    split: &DatasetSplit,
    matrix: &ExpressionMatrix,
    config: &RunConfig,
    learner: &L,
    positive_count: usize,
) -> Result<IterationTrace, PuError>
where
    L: Learner + ?Sized,
{
    let n_pos = split.train_positives.len();
    let unlabeled = &split.unlabeled;
    if split.validation.is_empty() {
        return Err(PuError::EmptyValidation);
    }
    let needed = match config.mode {
        LearningMode::Transductive => n_pos + positive_count,
        LearningMode::Inductive => 2 * n_pos + positive_count,
    };
    if unlabeled.len() < needed {
        return Err(PuError::InsufficientUnlabeled {
            needed,
            available: unlabeled.len(),
        });
    }

    let features = FeatureTable::new(split, matrix)?;
    let validation_rows: Vec<&[f64]> = split.validation.iter().map(|p| features.get(p)).collect();

    let mut negatives = initial_negatives(
        unlabeled,
        n_pos,
        rng::derive_seed(config.seed, INITIAL_SALT),
    )?;
    let mut promoted = BTreeSet::new();
    let mut states = Vec::with_capacity(config.iterations + 1);

    for k in 0..=config.iterations {
        let mut rows: Vec<&[f64]> = Vec::with_capacity(2 * n_pos + promoted.len());
        let mut labels = Vec::with_capacity(rows.capacity());
        for p in split.train_positives.iter().chain(&promoted) {
            rows.push(features.get(p));
            labels.push(1.0);
        }
        for p in &negatives {
            rows.push(features.get(p));
            labels.push(-1.0);
        }
        let model_seed = training_seed(config.seed, &negatives, &promoted);
        let model =
            learner
                .fit(&rows, &labels, model_seed)
                .map_err(|source| PuError::Training {
                    iteration: k,
                    source,
                })?;

        let accuracy = accuracy_on(&model, &validation_rows, config.threshold);
        let test_set = build_test_set(config.mode, unlabeled, &negatives)?;
        let scores = score_all(&model, &test_set, &features);

        let (next_negatives, next_promoted) = if k < config.iterations {
            let promote = select_top_positives(&scores, positive_count)?;
            let eligible: BTreeMap<InteractionPair, f64> = scores
                .iter()
                .filter(|(p, _)| !promote.contains(*p))
                .map(|(p, &s)| (p.clone(), s))
                .collect();
            (select_reliable_negatives(&eligible, n_pos)?, promote)
        } else {
            (BTreeSet::new(), BTreeSet::new())
        };

        states.push(IterationState {
            k,
            negatives: std::mem::replace(&mut negatives, next_negatives),
            promoted: std::mem::replace(&mut promoted, next_promoted),
            test_set,
            accuracy,
            scores,
            model_seed,
        });
    }
    Ok(IterationTrace {
        config: config.clone(),
        states,
    })
}

fn score_all<S: Scorer + Sync>(
    model: &S,
    test_set: &BTreeSet<InteractionPair>,
    features: &FeatureTable,
) -> BTreeMap<InteractionPair, f64> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pairs: Vec<&InteractionPair> = test_set.iter().collect();
        pairs
            .par_iter()
            .map(|&p| (p.clone(), model.predict_proba(features.get(p))))
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        test_set
            .iter()
            .map(|p| (p.clone(), model.predict_proba(features.get(p))))
            .collect()
    }
}

/// Feature vectors for every pair of a split, computed once per run.
struct FeatureTable {
    rows: BTreeMap<InteractionPair, Vec<f64>>,
}

impl FeatureTable {
    fn new(split: &DatasetSplit, matrix: &ExpressionMatrix) -> Result<Self, DataError> {
        let all = split
            .train_positives
            .iter()
            .chain(&split.validation)
            .chain(&split.unlabeled);
        let rows = build_design(all, matrix)?
            .into_iter()
            .map(|f| (f.pair, f.values))
            .collect();
        Ok(FeatureTable { rows })
    }

    fn get(&self, pair: &InteractionPair) -> &[f64] {
        &self.rows[pair]
    }
}
