//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! maximize  W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! subject to 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! The main loop is Platt's: sweep the examples (in a seeded random order),
//! and for every KKT violator pick its partner by the largest |E1 - E2|
//! among unbound multipliers, falling back to scans from random offsets.
//! Once a sweep over all examples changes nothing, a clean-up phase takes
//! maximal-violating-pair steps until the bias-free optimality gap is at
//! most `tol`, so the returned solution always meets the stopping rule.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{validate_training_set, KernelSpec, SvmError};
use crate::rng;

/// Solution of the dual problem on a training set.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Final dual objective W(a).
    pub objective: f64,
    /// W(a) after every accepted pair update, starting from W(0) = 0.
    pub objective_trace: Vec<f64>,
    /// Maximal-violating-pair gap at exit.
    pub kkt_gap: f64,
    pub converged: bool,
}

/// Dual objective evaluated directly from its definition.
pub fn dual_objective(alphas: &[f64], labels: &[f64], gram: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * gram[i * n + j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

pub fn gram_matrix<R: AsRef<[f64]>>(x: &[R], kernel: &KernelSpec) -> Vec<f64> {
    let n = x.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = kernel.eval(x[i].as_ref(), x[j].as_ref());
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    gram
}

struct Solver<'a> {
    n: usize,
    gram: &'a [f64],
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    /// f_i = sum_j a_j y_j K_ij, so E_i = f_i + b - y_i.
    f: Vec<f64>,
    b: f64,
    objective: f64,
    trace: Vec<f64>,
    rng: ChaCha8Rng,
}

const STEP_EPS: f64 = 1e-12;
const BOUND_EPS: f64 = 1e-12;

impl Solver<'_> {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    fn error(&self, i: usize) -> f64 {
        self.f[i] + self.b - self.y[i]
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.error(i1), self.error(i2));
        let s = y1 * y2;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        } else {
            ((a1 + a2 - self.c).max(0.0), (a1 + a2).min(self.c))
        };
        if hi - lo < STEP_EPS {
            return false;
        }
        let (k11, k12, k22) = (self.k(i1, i1), self.k(i1, i2), self.k(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;
        // objective change when a2 moves by d (a1 moves by -s*d)
        let gain = |d: f64| d * y2 * (e1 - e2) - 0.5 * eta * d * d;
        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else if gain(lo - a2) >= gain(hi - a2) {
            lo
        } else {
            hi
        };
        if (a2_new - a2).abs() < STEP_EPS * (a2_new + a2 + STEP_EPS) {
            return false;
        }
        let mut a1_new = a1 + s * (a2 - a2_new);
        if a1_new < 0.0 {
            a2_new += s * a1_new;
            a1_new = 0.0;
        } else if a1_new > self.c {
            a2_new += s * (a1_new - self.c);
            a1_new = self.c;
        }
        // rounding can leave an alpha a few ulps inside a bound, where the
        // pair can no longer move and the index keeps violating KKT
        let snap = |a: f64| {
            if a < BOUND_EPS * self.c {
                0.0
            } else if a > self.c * (1.0 - BOUND_EPS) {
                self.c
            } else {
                a
            }
        };
        let (a1_new, a2_new) = (snap(a1_new), snap(a2_new));
        let delta = gain(a2_new - a2);
        if delta <= 0.0 {
            return false;
        }

        let d1 = y1 * (a1_new - a1);
        let d2 = y2 * (a2_new - a2);
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        self.b = if a1_new > 0.0 && a1_new < self.c {
            b1
        } else if a2_new > 0.0 && a2_new < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        for k in 0..self.n {
            self.f[k] += d1 * self.k(i1, k) + d2 * self.k(i2, k);
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        let previous = self.objective;
        self.objective += delta;
        debug_assert!(self.objective >= previous);
        self.trace.push(self.objective);
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let e2 = self.error(i2);
        let r2 = e2 * self.y[i2];
        let a2 = self.alpha[i2];
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        let free: Vec<usize> = (0..self.n).filter(|&i| self.is_free(i)).collect();
        if free.len() > 1 {
            let best = free.iter().copied().filter(|&i| i != i2).max_by(|&a, &b| {
                let da = (self.error(a) - e2).abs();
                let db = (self.error(b) - e2).abs();
                da.total_cmp(&db).then(b.cmp(&a))
            });
            if let Some(i1) = best {
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        if !free.is_empty() {
            let start = self.rng.random_range(0..free.len());
            for off in 0..free.len() {
                if self.take_step(free[(start + off) % free.len()], i2) {
                    return true;
                }
            }
        }
        let start = self.rng.random_range(0..self.n);
        for off in 0..self.n {
            let i1 = (start + off) % self.n;
            if !self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    /// Returns (i_up, i_low, gap) for the maximal violating pair.
    fn max_violating_pair(&self) -> (usize, usize, f64) {
        let mut up = (usize::MAX, f64::NEG_INFINITY);
        let mut low = (usize::MAX, f64::INFINITY);
        for i in 0..self.n {
            let v = self.y[i] - self.f[i];
            let a = self.alpha[i];
            let in_up = (self.y[i] > 0.0 && a < self.c) || (self.y[i] < 0.0 && a > 0.0);
            let in_low = (self.y[i] > 0.0 && a > 0.0) || (self.y[i] < 0.0 && a < self.c);
            if in_up && v > up.1 {
                up = (i, v);
            }
            if in_low && v < low.1 {
                low = (i, v);
            }
        }
        (up.0, low.0, up.1 - low.1)
    }

    fn final_bias(&self) -> f64 {
        let free: Vec<f64> = (0..self.n)
            .filter(|&i| self.is_free(i))
            .map(|i| self.y[i] - self.f[i])
            .collect();
        if !free.is_empty() {
            return free.iter().sum::<f64>() / free.len() as f64;
        }
        let (i, j, _) = self.max_violating_pair();
        match (i, j) {
            (usize::MAX, usize::MAX) => self.b,
            (usize::MAX, j) => self.y[j] - self.f[j],
            (i, usize::MAX) => self.y[i] - self.f[i],
            (i, j) => 0.5 * ((self.y[i] - self.f[i]) + (self.y[j] - self.f[j])),
        }
    }
}

/// Solves the dual on a precomputed Gram matrix. `max_passes` caps the
/// number of outer sweeps; the clean-up phase is capped at
/// `max_passes * n` steps.
pub fn solve_dual(
    gram: &[f64],
    labels: &[f64],
    c: f64,
    tol: f64,
    max_passes: usize,
    seed: u64,
) -> DualSolution {
    let n = labels.len();
    let mut s = Solver {
        n,
        gram,
        y: labels,
        c,
        tol,
        alpha: vec![0.0; n],
        f: vec![0.0; n],
        b: 0.0,
        objective: 0.0,
        trace: vec![0.0],
        rng: rng::seeded(seed),
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut examine_all = true;
    let mut sweeps = 0;
    loop {
        if sweeps >= max_passes {
            break;
        }
        sweeps += 1;
        order.shuffle(&mut s.rng);
        let mut changed = 0;
        for &i in &order {
            if (examine_all || s.is_free(i)) && s.examine(i) {
                changed += 1;
            }
        }
        if examine_all {
            if changed == 0 {
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }

    let mut gap = s.max_violating_pair().2;
    let mut steps = 0;
    while gap > tol && steps < max_passes.saturating_mul(n.max(1)) {
        let (i, j, _) = s.max_violating_pair();
        if !s.take_step(i, j) {
            break;
        }
        steps += 1;
        gap = s.max_violating_pair().2;
    }

    let bias = s.final_bias();
    DualSolution {
        converged: gap <= tol,
        kkt_gap: gap,
        bias,
        objective: s.objective,
        objective_trace: s.trace,
        alphas: s.alpha,
    }
}

/// Convenience wrapper: validates the inputs, builds the Gram matrix and
/// solves the dual.
pub fn solve<R: AsRef<[f64]>>(
    x: &[R],
    labels: &[f64],
    c: f64,
    kernel: &KernelSpec,
    tol: f64,
    max_passes: usize,
    seed: u64,
) -> Result<DualSolution, SvmError> {
    validate_training_set(x, labels)?;
    kernel.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(SvmError::InvalidParameter(format!(
            "C must be positive, got {c}"
        )));
    }
    if tol.is_nan() || tol <= 0.0 || max_passes == 0 {
        return Err(SvmError::InvalidParameter(
            "tol and max_passes must be positive".into(),
        ));
    }
    let gram = gram_matrix(x, kernel);
    Ok(solve_dual(&gram, labels, c, tol, max_passes, seed))
}
