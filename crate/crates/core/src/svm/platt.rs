//! Platt sigmoid calibration.
//!
//! Sign convention (Platt's): `P(positive | f) = 1 / (1 + exp(A f + B))`.
//! A model whose decision values grow with the positive class therefore
//! gets `A < 0`. Targets are smoothed to `(N+ + 1) / (N+ + 2)` for
//! positives and `1 / (N- + 2)` for negatives, which keeps the optimum
//! finite on separable data.

use super::SvmError;

const GRAD_TOL: f64 = 1e-6;
const HESSIAN_RIDGE: f64 = 1e-12;

/// Probability of the positive class for decision value `f`.
pub fn sigmoid_proba(a: f64, b: f64, f: f64) -> f64 {
    let z = a * f + b;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Smoothed targets for ±1 labels.
pub fn platt_targets(labels: &[f64]) -> Vec<f64> {
    let n_pos = labels.iter().filter(|&&l| l > 0.0).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    labels
        .iter()
        .map(|&l| if l > 0.0 { hi } else { lo })
        .collect()
}

/// Negative log-likelihood at (A, B) and its gradient.
pub fn platt_nll(values: &[f64], targets: &[f64], a: f64, b: f64) -> (f64, [f64; 2]) {
    let mut nll = 0.0;
    let mut grad = [0.0; 2];
    for (&f, &t) in values.iter().zip(targets) {
        let z = a * f + b;
        nll += if z >= 0.0 {
            t * z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p() - (1.0 - t) * z
        };
        let d = t - sigmoid_proba(a, b, f);
        grad[0] += f * d;
        grad[1] += d;
    }
    (nll, grad)
}

fn nll_only(values: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    platt_nll(values, targets, a, b).0
}

/// Fits (A, B) by Newton's method with backtracking line search, starting
/// from `A = 0, B = ln((N- + 1) / (N+ + 1))`.
pub fn platt_fit(values: &[f64], labels: &[f64], max_iter: usize) -> Result<(f64, f64), SvmError> {
    if values.len() != labels.len() {
        return Err(SvmError::LengthMismatch {
            expected: values.len(),
            found: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l > 0.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(SvmError::SingleClass);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SvmError::NonFinite);
    }
    let targets = platt_targets(labels);
    let mut a = 0.0;
    let mut b = ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln();
    let (mut fval, mut grad) = platt_nll(values, &targets, a, b);

    for _ in 0..max_iter {
        if grad[0].hypot(grad[1]) <= GRAD_TOL {
            break;
        }
        let (mut h11, mut h12, mut h22) = (HESSIAN_RIDGE, 0.0, HESSIAN_RIDGE);
        for &f in values {
            let p = sigmoid_proba(a, b, f);
            let w = p * (1.0 - p);
            h11 += f * f * w;
            h12 += f * w;
            h22 += w;
        }
        let det = h11 * h22 - h12 * h12;
        // Newton direction: d = -H^{-1} g
        let (da, db) = if det > 0.0 && det.is_finite() {
            (
                -(h22 * grad[0] - h12 * grad[1]) / det,
                -(-h12 * grad[0] + h11 * grad[1]) / det,
            )
        } else {
            (-grad[0], -grad[1])
        };
        let slope = grad[0] * da + grad[1] * db;
        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1e-12 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = nll_only(values, &targets, na, nb);
            if nf <= fval + 1e-4 * step * slope {
                a = na;
                b = nb;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        (fval, grad) = platt_nll(values, &targets, a, b);
    }
    Ok((a, b))
}
