//! Binary kernel SVM: SMO dual solver plus Platt calibration.

mod kernel;
pub mod platt;
pub mod smo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use platt::{platt_fit, sigmoid_proba};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SvmError {
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
    #[error("model has no support vectors")]
    NoSupportVectors,
}

pub(crate) fn validate_training_set<R: AsRef<[f64]>>(
    x: &[R],
    y: &[f64],
) -> Result<usize, SvmError> {
    if x.is_empty() {
        return Err(SvmError::Empty);
    }
    if x.len() != y.len() {
        return Err(SvmError::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let dim = x[0].as_ref().len();
    for row in x {
        let row = row.as_ref();
        if row.len() != dim {
            return Err(SvmError::LengthMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite);
        }
    }
    if let Some(&bad) = y.iter().find(|&&l| l != 1.0 && l != -1.0) {
        return Err(SvmError::InvalidLabel(bad));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(SvmError::SingleClass);
    }
    Ok(dim)
}

/// SVM hyperparameters. `gamma = None` resolves to `1 / dim` at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelKind,
    pub gamma: Option<f64>,
    pub degree: u32,
    pub coef0: f64,
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub platt_max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            kernel: KernelKind::Rbf,
            gamma: None,
            degree: 3,
            coef0: 0.0,
            c: 1.0,
            tol: 1e-3,
            max_passes: 10_000,
            platt_max_iter: 100,
        }
    }
}

impl SvmParams {
    pub fn with_kernel(kernel: KernelKind) -> Self {
        SvmParams {
            kernel,
            ..Default::default()
        }
    }

    pub fn kernel_for(&self, dim: usize) -> KernelSpec {
        let gamma = self.gamma.unwrap_or(1.0 / dim.max(1) as f64);
        match self.kernel {
            KernelKind::Rbf => KernelSpec::rbf(gamma),
            KernelKind::Linear => KernelSpec::linear(),
            KernelKind::Polynomial => KernelSpec::polynomial(gamma, self.degree, self.coef0),
        }
    }
}

/// A trained SVM. Only multipliers with `alpha > 0` are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    support_vectors: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    labels: Vec<f64>,
    bias: f64,
    kernel: KernelSpec,
    platt_a: f64,
    platt_b: f64,
}

impl SvmModel {
    /// Uncalibrated models carry `(A, B) = (-1, 0)`.
    pub fn new(
        support_vectors: Vec<Vec<f64>>,
        alphas: Vec<f64>,
        labels: Vec<f64>,
        bias: f64,
        kernel: KernelSpec,
    ) -> Result<Self, SvmError> {
        if support_vectors.is_empty() {
            return Err(SvmError::NoSupportVectors);
        }
        if alphas.len() != support_vectors.len() || labels.len() != support_vectors.len() {
            return Err(SvmError::LengthMismatch {
                expected: support_vectors.len(),
                found: alphas.len().min(labels.len()),
            });
        }
        Ok(SvmModel {
            support_vectors,
            alphas,
            labels,
            bias,
            kernel,
            platt_a: -1.0,
            platt_b: 0.0,
        })
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn platt(&self) -> (f64, f64) {
        (self.platt_a, self.platt_b)
    }

    pub fn with_platt(mut self, a: f64, b: f64) -> Self {
        self.platt_a = a;
        self.platt_b = b;
        self
    }

    pub fn dim(&self) -> usize {
        self.support_vectors[0].len()
    }

    /// `sum_i alpha_i y_i K(sv_i, x) + b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.dim() {
            return Err(SvmError::LengthMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.decision_unchecked(x))
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
            .map(|((sv, a), y)| a * y * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, SvmError> {
        self.decision_value(x)
            .map(|f| sigmoid_proba(self.platt_a, self.platt_b, f))
    }
}

/// Trains an uncalibrated SVM with SMO.
pub fn smo_train<R: AsRef<[f64]>>(
    x: &[R],
    y: &[f64],
    c: f64,
    kernel: &KernelSpec,
    tol: f64,
    max_passes: usize,
    seed: u64,
) -> Result<SvmModel, SvmError> {
    let sol = smo::solve(x, y, c, kernel, tol, max_passes, seed)?;
    let mut svs = Vec::new();
    let mut alphas = Vec::new();
    let mut labels = Vec::new();
    for (i, &a) in sol.alphas.iter().enumerate() {
        if a > 0.0 {
            svs.push(x[i].as_ref().to_vec());
            alphas.push(a);
            labels.push(y[i]);
        }
    }
    SvmModel::new(svs, alphas, labels, sol.bias, *kernel)
}

/// SMO training followed by in-sample Platt calibration.
pub fn train_svm<R: AsRef<[f64]>>(
    x: &[R],
    y: &[f64],
    params: &SvmParams,
    seed: u64,
) -> Result<SvmModel, SvmError> {
    let dim = validate_training_set(x, y)?;
    let kernel = params.kernel_for(dim);
    let model = smo_train(x, y, params.c, &kernel, params.tol, params.max_passes, seed)?;
    let values: Vec<f64> = x
        .iter()
        .map(|r| model.decision_unchecked(r.as_ref()))
        .collect();
    let (a, b) = platt_fit(&values, y, params.platt_max_iter)?;
    Ok(model.with_platt(a, b))
}
