//! Positive-unlabeled prediction of transcription-factor/gene interactions.
//!
//! Pipeline: load and standardize an expression matrix ([`datamodel`]),
//! turn ordered (TF, target) pairs into concatenated profiles
//! ([`features`]), and iteratively mine reliable negatives from the
//! unlabeled pool with a probabilistic classifier ([`pulearn`]), either a
//! kernel SVM ([`svm`]) or a random forest ([`forest`]). [`synth`] plants a
//! known network in synthetic expression data for end-to-end testing.

pub mod datamodel;
pub mod features;
pub mod forest;
pub mod pulearn;
pub mod rng;
pub mod svm;
pub mod synth;

pub use datamodel::{
    generate_unlabeled, load_expression_matrix, load_interactions, split_positive,
    split_positive_with, DataError, DatasetSplit, ExpressionMatrix, InteractionPair, OddSplit,
    PairLabel,
};
pub use features::{build_design, build_feature_vector, FeatureVector};
pub use forest::{train_forest, train_forest_with, ForestModel, ForestParams, TreeNode};
pub use pulearn::{
    build_test_set, initial_negatives, run_iterations, run_pn_bootstrap, select_reliable_negatives,
    ClassifierSpec, IterationState, IterationTrace, LearningMode, PuError, RunConfig,
};
pub use svm::{KernelKind, KernelSpec, SvmModel, SvmParams};
pub use synth::{generate, SynthData, SynthSpec};
