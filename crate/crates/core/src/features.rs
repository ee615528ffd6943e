//! Ordered feature vectors for (TF, target) pairs.
//!
//! A pair's vector is the TF profile followed by the target profile, so the
//! order of the concatenation encodes the direction of regulation. The
//! concatenated vector is then scaled on its own to zero mean and unit
//! population standard deviation.

use crate::datamodel::{standardize_in_place, DataError, ExpressionMatrix, InteractionPair};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub pair: InteractionPair,
    pub values: Vec<f64>,
}

pub fn build_feature_vector(
    pair: &InteractionPair,
    matrix: &ExpressionMatrix,
) -> Result<FeatureVector, DataError> {
    let lookup = |id: &str| {
        matrix.profile(id).ok_or_else(|| DataError::InvalidPair {
            tf: pair.tf.clone(),
            target: pair.target.clone(),
            reason: format!("gene `{id}` is not in the expression matrix"),
        })
    };
    let tf = lookup(&pair.tf)?;
    let target = lookup(&pair.target)?;
    let mut values = Vec::with_capacity(2 * matrix.n_conditions());
    values.extend_from_slice(tf);
    values.extend_from_slice(target);
    standardize_in_place(&mut values);
    Ok(FeatureVector {
        pair: pair.clone(),
        values,
    })
}

/// Feature vectors for `pairs`, in the same order.
pub fn build_design<'a, I>(
    pairs: I,
    matrix: &ExpressionMatrix,
) -> Result<Vec<FeatureVector>, DataError>
where
    I: IntoIterator<Item = &'a InteractionPair>,
{
    pairs
        .into_iter()
        .map(|p| build_feature_vector(p, matrix))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix() -> ExpressionMatrix {
        ExpressionMatrix::new(
            vec!["tf".into(), "g".into(), "h".into()],
            2,
            vec![1.0, -1.0, -1.0, 1.0, 3.0, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn concatenation_of_unit_profiles_is_unchanged() {
        let fv = build_feature_vector(&InteractionPair::new("tf", "g"), &matrix()).unwrap();
        assert_eq!(fv.values, [1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn order_matters() {
        let m = matrix();
        let ab = build_feature_vector(&InteractionPair::new("tf", "h"), &m).unwrap();
        let ba = build_feature_vector(&InteractionPair::new("h", "tf"), &m).unwrap();
        assert_ne!(ab.values, ba.values);
    }

    #[test]
    fn length_doubles_and_vector_is_scaled() {
        let ids: Vec<String> = (0..2).map(|i| format!("g{i}")).collect();
        let values = vec![0.3, 1.0, 2.5, -4.0, 7.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let m = ExpressionMatrix::new(ids, 5, values).unwrap();
        let fv = build_feature_vector(&InteractionPair::new("g0", "g1"), &m).unwrap();
        assert_eq!(fv.values.len(), 10);
        let mean = fv.values.iter().sum::<f64>() / 10.0;
        let var = fv.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 10.0;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(var.sqrt(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn constant_concatenation_is_zero() {
        let m = ExpressionMatrix::new(vec!["a".into(), "b".into()], 2, vec![2.0; 4]).unwrap();
        let fv = build_feature_vector(&InteractionPair::new("a", "b"), &m).unwrap();
        assert_eq!(fv.values, [0.0; 4]);
    }

    #[test]
    fn design_preserves_order_and_reports_bad_pair() {
        let m = matrix();
        assert!(build_design(&[], &m).unwrap().is_empty());
        let pairs = [
            InteractionPair::new("tf", "h"),
            InteractionPair::new("tf", "g"),
            InteractionPair::new("g", "h"),
        ];
        let design = build_design(&pairs, &m).unwrap();
        let got: Vec<_> = design.iter().map(|f| f.pair.clone()).collect();
        assert_eq!(got, pairs);

        let bad = [
            InteractionPair::new("tf", "g"),
            InteractionPair::new("tf", "nope"),
        ];
        match build_design(&bad, &m) {
            Err(DataError::InvalidPair { tf, target, .. }) => {
                assert_eq!((tf.as_str(), target.as_str()), ("tf", "nope"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
