//! Experiment manifests: blank-line separated records of `key = value` lines.
//!
//! ```text
//! # CRP with both classifiers
//! expression = expr.tsv
//! interactions = known.tsv
//! tf = crp
//! classifier = svm
//! output = crp_svm
//!
//! expression = expr.tsv
//! interactions = known.tsv
//! tf = crp
//! classifier = rf
//! n_trees = 500
//! output = crp_rf
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Keys not
//! given in a record fall back to the command-line defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use pu_grn::{ClassifierSpec, ForestParams, KernelKind, LearningMode, OddSplit, SvmParams};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ManifestError {
    #[error("line {line}: expected `key = value`, found `{content}`")]
    Syntax { line: usize, content: String },
    #[error("record starting at line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("record starting at line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("record starting at line {line}: missing required key `{key}`")]
    MissingKey { line: usize, key: String },
    #[error("record starting at line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("output `{0}` is used by more than one job")]
    DuplicateOutput(String),
    #[error("manifest has no jobs")]
    Empty,
}

/// Fallbacks for keys a record leaves out.
#[derive(Debug, Clone)]
pub struct JobDefaults {
    pub classifier: String,
    pub mode: LearningMode,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for JobDefaults {
    fn default() -> Self {
        JobDefaults {
            classifier: "svm".into(),
            mode: LearningMode::Transductive,
            iterations: 15,
            seed: 0,
        }
    }
}

/// One fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobSpec {
    pub expression_path: PathBuf,
    pub interactions_path: PathBuf,
    pub tf_id: String,
    pub classifier: ClassifierSpec,
    pub mode: LearningMode,
    pub iterations: usize,
    pub seed: u64,
    pub threshold: f64,
    pub odd_split: OddSplit,
    /// Extra positives promoted per iteration; 0 runs the plain loop.
    pub positive_count: usize,
    pub output: String,
}

const KEYS: &[&str] = &[
    "expression",
    "interactions",
    "tf",
    "classifier",
    "mode",
    "iterations",
    "seed",
    "threshold",
    "odd_split",
    "positive_count",
    "kernel",
    "gamma",
    "degree",
    "coef0",
    "c",
    "n_trees",
    "mtry",
    "min_leaf",
    "output",
];

pub fn parse_manifest(
    text: &str,
    base_dir: &Path,
    defaults: &JobDefaults,
) -> Result<Vec<JobSpec>, ManifestError> {
    let mut records: Vec<(usize, BTreeMap<String, String>)> = Vec::new();
    let mut current: Option<(usize, BTreeMap<String, String>)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            records.extend(current.take());
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ManifestError::Syntax {
            line: i + 1,
            content: raw.to_string(),
        })?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim().to_string());
        let (start, map) = current.get_or_insert_with(|| (i + 1, BTreeMap::new()));
        if !KEYS.contains(&key.as_str()) {
            return Err(ManifestError::UnknownKey { line: *start, key });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ManifestError::DuplicateKey { line: *start, key });
        }
    }
    records.extend(current);
    if records.is_empty() {
        return Err(ManifestError::Empty);
    }

    let jobs: Vec<JobSpec> = records
        .into_iter()
        .enumerate()
        .map(|(idx, (line, map))| build_job(idx, line, &map, base_dir, defaults))
        .collect::<Result<_, _>>()?;
    let mut seen = BTreeSet::new();
    for job in &jobs {
        if !seen.insert(job.output.as_str()) {
            return Err(ManifestError::DuplicateOutput(job.output.clone()));
        }
    }
    Ok(jobs)
}

fn build_job(
    index: usize,
    line: usize,
    map: &BTreeMap<String, String>,
    base_dir: &Path,
    defaults: &JobDefaults,
) -> Result<JobSpec, ManifestError> {
    let required = |key: &str| {
        map.get(key)
            .cloned()
            .ok_or_else(|| ManifestError::MissingKey {
                line,
                key: key.to_string(),
            })
    };
    let path = |key: &str| -> Result<PathBuf, ManifestError> {
        let p = PathBuf::from(required(key)?);
        Ok(if p.is_absolute() { p } else { base_dir.join(p) })
    };
    let get = |key: &str| map.get(key).map(String::as_str);

    let params = ClassifierArgs {
        classifier: get("classifier")
            .unwrap_or(&defaults.classifier)
            .to_string(),
        kernel: get("kernel").map(str::to_string),
        gamma: parse_opt(get("gamma"), "gamma", line)?,
        degree: parse_opt(get("degree"), "degree", line)?,
        coef0: parse_opt(get("coef0"), "coef0", line)?,
        c: parse_opt(get("c"), "c", line)?,
        n_trees: parse_opt(get("n_trees"), "n_trees", line)?,
        mtry: parse_opt(get("mtry"), "mtry", line)?,
        min_leaf: parse_opt(get("min_leaf"), "min_leaf", line)?,
    };
    let classifier = params
        .build()
        .map_err(|reason| ManifestError::InvalidValue {
            line,
            key: "classifier".into(),
            reason,
        })?;
    let mode = match get("mode") {
        Some(m) => m.parse().map_err(|reason| ManifestError::InvalidValue {
            line,
            key: "mode".into(),
            reason,
        })?,
        None => defaults.mode,
    };
    let odd_split = match get("odd_split") {
        None | Some("training") => OddSplit::ExtraToTraining,
        Some("validation") => OddSplit::ExtraToValidation,
        Some(other) => {
            return Err(ManifestError::InvalidValue {
                line,
                key: "odd_split".into(),
                reason: format!("expected `training` or `validation`, got `{other}`"),
            })
        }
    };
    let threshold: f64 = parse_opt(get("threshold"), "threshold", line)?.unwrap_or(0.5);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ManifestError::InvalidValue {
            line,
            key: "threshold".into(),
            reason: format!("{threshold} is outside [0, 1]"),
        });
    }
    Ok(JobSpec {
        expression_path: path("expression")?,
        interactions_path: path("interactions")?,
        tf_id: required("tf")?,
        classifier,
        mode,
        iterations: parse_opt(get("iterations"), "iterations", line)?
            .unwrap_or(defaults.iterations),
        seed: parse_opt(get("seed"), "seed", line)?.unwrap_or(defaults.seed),
        threshold,
        odd_split,
        positive_count: parse_opt(get("positive_count"), "positive_count", line)?.unwrap_or(0),
        output: get("output")
            .map(str::to_string)
            .unwrap_or_else(|| format!("job{index:03}")),
    })
}

fn parse_opt<T: std::str::FromStr>(
    value: Option<&str>,
    key: &str,
    line: usize,
) -> Result<Option<T>, ManifestError>
where
    T::Err: std::fmt::Display,
{
    value
        .map(|v| {
            v.parse().map_err(|e: T::Err| ManifestError::InvalidValue {
                line,
                key: key.to_string(),
                reason: e.to_string(),
            })
        })
        .transpose()
}

/// Classifier settings as they arrive from a manifest or the command line.
#[derive(Debug, Clone, Default)]
pub struct ClassifierArgs {
    pub classifier: String,
    pub kernel: Option<String>,
    pub gamma: Option<f64>,
    pub degree: Option<u32>,
    pub coef0: Option<f64>,
    pub c: Option<f64>,
    pub n_trees: Option<usize>,
    pub mtry: Option<usize>,
    pub min_leaf: Option<usize>,
}

impl ClassifierArgs {
    pub fn build(&self) -> Result<ClassifierSpec, String> {
        match self.classifier.to_ascii_lowercase().as_str() {
            "svm" => {
                let defaults = SvmParams::default();
                let kernel: KernelKind = match &self.kernel {
                    Some(k) => k.parse()?,
                    None => KernelKind::Rbf,
                };
                Ok(ClassifierSpec::Svm(SvmParams {
                    kernel,
                    gamma: self.gamma,
                    degree: self.degree.unwrap_or(defaults.degree),
                    coef0: self.coef0.unwrap_or(defaults.coef0),
                    c: self.c.unwrap_or(defaults.c),
                    ..defaults
                }))
            }
            "rf" => {
                let defaults = ForestParams::default();
                Ok(ClassifierSpec::Forest(ForestParams {
                    n_trees: self.n_trees.unwrap_or(defaults.n_trees),
                    mtry: self.mtry,
                    min_leaf: self.min_leaf.unwrap_or(defaults.min_leaf),
                    max_depth: None,
                }))
            }
            other => Err(format!("unknown classifier `{other}` (expected svm or rf)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_JOBS: &str = "\
# two jobs
expression = expr.tsv
interactions = /abs/known.tsv
tf = crp
output = a

expression = expr.tsv
interactions = known.tsv
tf = fnr
classifier = rf
n_trees = 100
mode = inductive
seed = 7
output = b
";

    #[test]
    fn parses_records_with_defaults() {
        let jobs = parse_manifest(TWO_JOBS, Path::new("/data"), &JobDefaults::default()).unwrap();
        assert_eq!(jobs.len(), 2);
        assert_eq!(jobs[0].expression_path, PathBuf::from("/data/expr.tsv"));
        assert_eq!(jobs[0].interactions_path, PathBuf::from("/abs/known.tsv"));
        assert_eq!(jobs[0].mode, LearningMode::Transductive);
        assert_eq!(jobs[0].iterations, 15);
        assert!(matches!(jobs[0].classifier, ClassifierSpec::Svm(_)));
        match &jobs[1].classifier {
            ClassifierSpec::Forest(p) => assert_eq!(p.n_trees, 100),
            other => panic!("{other:?}"),
        }
        assert_eq!((jobs[1].mode, jobs[1].seed), (LearningMode::Inductive, 7));
    }

    #[test]
    fn rejects_bad_records() {
        let d = JobDefaults::default();
        let p = Path::new(".");
        assert_eq!(
            parse_manifest("\n\n# nothing\n", p, &d),
            Err(ManifestError::Empty)
        );
        assert!(matches!(
            parse_manifest("expression expr.tsv\n", p, &d),
            Err(ManifestError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_manifest("expression = e\ntf = a\n", p, &d),
            Err(ManifestError::MissingKey { .. })
        ));
        assert!(matches!(
            parse_manifest("colour = red\n", p, &d),
            Err(ManifestError::UnknownKey { .. })
        ));
        let dup = "expression=e\ninteractions=i\ntf=a\noutput=x\n\nexpression=e\ninteractions=i\ntf=b\noutput=x\n";
        assert_eq!(
            parse_manifest(dup, p, &d),
            Err(ManifestError::DuplicateOutput("x".into()))
        );
        assert!(matches!(
            parse_manifest(
                "expression=e\ninteractions=i\ntf=a\nclassifier=knn\n",
                p,
                &d
            ),
            Err(ManifestError::InvalidValue { .. })
        ));
    }
}
