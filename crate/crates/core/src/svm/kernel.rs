use serde::{Deserialize, Serialize};

use super::SvmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Rbf,
    Linear,
    Polynomial,
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rbf" | "radial" => Ok(KernelKind::Rbf),
            "linear" => Ok(KernelKind::Linear),
            "polynomial" | "poly" => Ok(KernelKind::Polynomial),
            other => Err(format!("unknown kernel `{other}`")),
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelKind::Rbf => "rbf",
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
        })
    }
}

/// A fully resolved kernel. `gamma` is ignored by the linear kernel;
/// `degree` and `coef0` are used only by the polynomial kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub degree: u32,
    pub coef0: f64,
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            gamma,
            degree: 3,
            coef0: 0.0,
        }
    }

    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            gamma: 1.0,
            degree: 3,
            coef0: 0.0,
        }
    }

    pub fn polynomial(gamma: f64, degree: u32, coef0: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            gamma,
            degree,
            coef0,
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        let gamma_used = self.kind != KernelKind::Linear;
        if gamma_used && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SvmError::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.kind == KernelKind::Polynomial && (self.degree == 0 || !self.coef0.is_finite()) {
            return Err(SvmError::InvalidParameter(format!(
                "polynomial kernel needs degree >= 1 and finite coef0, got degree {} coef0 {}",
                self.degree, self.coef0
            )));
        }
        Ok(())
    }

    /// Kernel value without the length check.
    pub(crate) fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Rbf => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
            KernelKind::Linear => dot(x, y),
            KernelKind::Polynomial => {
                (self.gamma * dot(x, y) + self.coef0).powi(self.degree as i32)
            }
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// RBF: `exp(-gamma * |x - y|^2)`; linear: `<x, y>`;
/// polynomial: `(gamma * <x, y> + coef0)^degree`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64, SvmError> {
    if x.len() != y.len() {
        return Err(SvmError::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(spec.eval(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        let k = KernelSpec::rbf(0.5);
        assert_abs_diff_eq!(
            kernel_eval(&k, &[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            (-1.0_f64).exp(),
            epsilon = 1e-15
        );
        assert_eq!(
            kernel_eval(&KernelSpec::linear(), &[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            11.0
        );
        let p = KernelSpec::polynomial(0.5, 3, 1.0);
        assert_abs_diff_eq!(
            kernel_eval(&p, &[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            6.5_f64.powi(3),
            epsilon = 1e-12
        );
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            kernel_eval(&KernelSpec::linear(), &[1.0], &[1.0, 2.0]),
            Err(SvmError::LengthMismatch {
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn invalid_parameters() {
        assert!(KernelSpec::rbf(0.0).validate().is_err());
        assert!(KernelSpec::polynomial(1.0, 0, 0.0).validate().is_err());
        assert!(KernelSpec::linear().validate().is_ok());
    }

    #[test]
    fn parses_names() {
        assert_eq!("RBF".parse::<KernelKind>(), Ok(KernelKind::Rbf));
        assert_eq!("poly".parse::<KernelKind>(), Ok(KernelKind::Polynomial));
        assert!("sigmoid".parse::<KernelKind>().is_err());
    }

    proptest! {
        #[test]
        fn rbf_self_similarity_is_one(x in prop::collection::vec(-1e3f64..1e3, 1..16), g in 1e-3f64..10.0) {
            prop_assert_eq!(kernel_eval(&KernelSpec::rbf(g), &x, &x).unwrap(), 1.0);
        }
    }
}
