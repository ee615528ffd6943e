//! One-parameter sweeps: same base runs, one classifier setting varied.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use pu_grn::{
    run_iterations, ClassifierSpec, DatasetSplit, ExpressionMatrix, InteractionPair, KernelKind,
    LearningMode, OddSplit, PuError, RunConfig, SvmParams,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::jobs::format_sig6;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep needs at least one value")]
    NoValues,
    #[error("sweep needs at least one tf and one seed")]
    NoRuns,
    #[error("axis `{axis}` does not apply to classifier `{classifier}`")]
    AxisMismatch { axis: Axis, classifier: String },
    #[error("invalid {axis} value `{value}`: {reason}")]
    BadValue {
        axis: Axis,
        value: String,
        reason: String,
    },
    #[error("duplicate sweep value `{0}`")]
    DuplicateValue(String),
    #[error("tf {tf}, seed {seed}, value {value}: {source}")]
    Run {
        tf: String,
        seed: u64,
        value: String,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Kernel,
    NTrees,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Kernel => "kernel",
            Axis::NTrees => "n_trees",
        })
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "kernel" => Ok(Axis::Kernel),
            "n_trees" | "n-trees" | "trees" => Ok(Axis::NTrees),
            _ => Err(format!(
                "unknown sweep axis `{s}` (expected kernel or n_trees)"
            )),
        }
    }
}

/// The classifier for each sweep value, checked against the axis.
pub fn expand_axis(
    base: &ClassifierSpec,
    axis: Axis,
    values: &[String],
) -> Result<Vec<ClassifierSpec>, SweepError> {
    if values.is_empty() {
        return Err(SweepError::NoValues);
    }
    let mut seen = BTreeSet::new();
    for v in values {
        if !seen.insert(v.to_ascii_lowercase()) {
            return Err(SweepError::DuplicateValue(v.clone()));
        }
    }
    let bad = |value: &String, reason: String| SweepError::BadValue {
        axis,
        value: value.clone(),
        reason,
    };
    match (axis, base) {
        (Axis::Kernel, ClassifierSpec::Svm(p)) => values
            .iter()
            .map(|v| {
                let kernel: KernelKind = v.parse().map_err(|e| bad(v, e))?;
                Ok(ClassifierSpec::Svm(SvmParams {
                    kernel,
                    ..p.clone()
                }))
            })
            .collect(),
        (Axis::NTrees, ClassifierSpec::Forest(p)) => values
            .iter()
            .map(|v| {
                let n: usize = v
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(v, e.to_string()))?;
                if n == 0 {
                    return Err(bad(v, "must be positive".into()));
                }
                let mut p = p.clone();
                p.n_trees = n;
                Ok(ClassifierSpec::Forest(p))
            })
            .collect(),
        (axis, other) => Err(SweepError::AxisMismatch {
            axis,
            classifier: other.name().to_string(),
        }),
    }
}

/// What every run of a sweep shares.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub tfs: Vec<String>,
    pub seeds: Vec<u64>,
    pub mode: LearningMode,
    pub iterations: usize,
    pub threshold: f64,
    pub odd_split: OddSplit,
    pub base: ClassifierSpec,
    pub axis: Axis,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    /// Mean of the k = K accuracies over all tf × seed runs.
    pub final_accuracy: f64,
    /// Final accuracy of each run, tf-major then seed.
    pub runs: Vec<f64>,
}

pub fn run_sweep(
    matrix: &ExpressionMatrix,
    known: &BTreeSet<InteractionPair>,
    plan: &SweepPlan,
) -> Result<Vec<SweepRow>, SweepError> {
    let specs = expand_axis(&plan.base, plan.axis, &plan.values)?;
    if plan.tfs.is_empty() || plan.seeds.is_empty() {
        return Err(SweepError::NoRuns);
    }
    let cells: Vec<(usize, &String, u64)> = (0..specs.len())
        .flat_map(|v| {
            plan.tfs
                .iter()
                .flat_map(move |tf| plan.seeds.iter().map(move |&s| (v, tf, s)))
        })
        .collect();
    let finals: Vec<f64> = cells
        .par_iter()
        .map(|&(v, tf, seed)| {
            let wrap = |source: Box<dyn std::error::Error + Send + Sync>| SweepError::Run {
                tf: tf.clone(),
                seed,
                value: plan.values[v].clone(),
                source,
            };
            let split = DatasetSplit::for_tf(tf, matrix, known, seed, plan.odd_split)
                .map_err(|e| wrap(Box::new(e)))?;
            let config = RunConfig {
                mode: plan.mode,
                classifier: specs[v].clone(),
                iterations: plan.iterations,
                seed,
                threshold: plan.threshold,
            };
            let trace =
                run_iterations(&split, matrix, &config).map_err(|e: PuError| wrap(Box::new(e)))?;
            Ok(trace.final_state().accuracy)
        })
        .collect::<Result<_, SweepError>>()?;

    let per_value = plan.tfs.len() * plan.seeds.len();
    Ok(plan
        .values
        .iter()
        .zip(finals.chunks(per_value))
        .map(|(value, runs)| SweepRow {
            value: value.clone(),
            final_accuracy: runs.iter().sum::<f64>() / runs.len() as f64,
            runs: runs.to_vec(),
        })
        .collect())
}

/// Writes `value,final_accuracy` rows.
pub fn write_comparison_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "value,final_accuracy")?;
    for r in rows {
        writeln!(out, "{},{}", r.value, format_sig6(r.final_accuracy))?;
    }
    Ok(())
}
