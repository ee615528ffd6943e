//! Planted-network generator.
//!
//! TF profiles are standard normal. Each TF regulates its own disjoint block
//! of target genes; a target's profile is `strength * (±TF profile) + noise`,
//! with the sign drawn per edge (up- or down-regulation). All other genes are
//! independent standard normal noise. A configurable fraction of each TF's
//! planted edges is withheld from the returned positives, so the unlabeled
//! pool contains hidden true interactions.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{ExpressionMatrix, InteractionPair};
use crate::rng;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid synthetic spec: {0}")]
pub struct SynthError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Total genes in the matrix, TFs included.
    pub n_genes: usize,
    pub n_conditions: usize,
    pub n_tfs: usize,
    /// Planted edges per TF (known plus hidden).
    pub positives_per_tf: usize,
    pub regulation_strength: f64,
    pub noise_std: f64,
    /// Fraction of planted edges left out of the known positives.
    pub hidden_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_genes: 200,
            n_conditions: 20,
            n_tfs: 4,
            positives_per_tf: 40,
            regulation_strength: 0.9,
            noise_std: 0.5,
            hidden_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError(msg));
        if self.n_conditions < 2 {
            return fail(format!(
                "n_conditions must be >= 2, got {}",
                self.n_conditions
            ));
        }
        if self.n_tfs == 0 || self.positives_per_tf == 0 {
            return fail("n_tfs and positives_per_tf must be positive".into());
        }
        if self.n_genes < 2 || self.positives_per_tf >= self.n_genes - 1 {
            return fail(format!(
                "positives_per_tf ({}) must be below n_genes - 1 ({})",
                self.positives_per_tf,
                self.n_genes.saturating_sub(1)
            ));
        }
        let needed = self.n_tfs * (self.positives_per_tf + 1);
        if needed > self.n_genes {
            return fail(format!(
                "{} TFs with {} disjoint targets each need {} genes, have {}",
                self.n_tfs, self.positives_per_tf, needed, self.n_genes
            ));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return fail(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        if !self.regulation_strength.is_finite() {
            return fail("regulation_strength must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.hidden_fraction) {
            return fail(format!(
                "hidden_fraction must lie in [0, 1], got {}",
                self.hidden_fraction
            ));
        }
        Ok(())
    }

    pub fn hidden_per_tf(&self) -> usize {
        (self.positives_per_tf as f64 * self.hidden_fraction).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regulation {
    Regulated,
    Unregulated,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub matrix: ExpressionMatrix,
    pub tf_ids: Vec<String>,
    /// Known positives (planted edges minus the hidden ones).
    pub positives: BTreeSet<InteractionPair>,
    /// Every (tf, gene) pair with gene != tf.
    pub truth: BTreeMap<InteractionPair, Regulation>,
    /// +1 for up-regulation, -1 for down-regulation, per planted edge.
    pub signs: BTreeMap<InteractionPair, f64>,
}

impl SynthData {
    /// Planted edges that are not among the known positives.
    pub fn hidden_positives(&self) -> BTreeSet<InteractionPair> {
        self.truth
            .iter()
            .filter(|(p, r)| **r == Regulation::Regulated && !self.positives.contains(*p))
            .map(|(p, _)| p.clone())
            .collect()
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData, SynthError> {
    spec.validate()?;
    let mut r = rng::seeded(spec.seed);
    let m = spec.n_conditions;
    let tf_ids: Vec<String> = (0..spec.n_tfs).map(|i| format!("tf{i:02}")).collect();
    let gene_ids: Vec<String> = (0..spec.n_genes - spec.n_tfs)
        .map(|i| format!("g{i:04}"))
        .collect();

    let mut values = vec![0.0; spec.n_genes * m];
    for v in values.iter_mut().take(spec.n_tfs * m) {
        *v = StandardNormal.sample(&mut r);
    }

    let mut targets: Vec<usize> = (0..gene_ids.len()).collect();
    targets.shuffle(&mut r);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| SynthError(e.to_string()))?;
    let mut regulated_by: Vec<Option<(usize, f64)>> = vec![None; gene_ids.len()];
    for (t, block) in targets
        .chunks(spec.positives_per_tf)
        .take(spec.n_tfs)
        .enumerate()
    {
        for &g in block {
            let sign = if r.random_bool(0.5) { 1.0 } else { -1.0 };
            regulated_by[g] = Some((t, sign));
        }
    }
    for (g, reg) in regulated_by.iter().enumerate() {
        let row = (spec.n_tfs + g) * m;
        for c in 0..m {
            values[row + c] = match reg {
                Some((t, sign)) => {
                    spec.regulation_strength * sign * values[t * m + c] + noise.sample(&mut r)
                }
                None => StandardNormal.sample(&mut r),
            };
        }
    }

    let mut truth = BTreeMap::new();
    let mut signs = BTreeMap::new();
    let all_ids: Vec<&String> = tf_ids.iter().chain(&gene_ids).collect();
    for tf in &tf_ids {
        for &id in all_ids.iter().filter(|&&id| id != tf) {
            truth.insert(
                InteractionPair::new(tf.as_str(), id.as_str()),
                Regulation::Unregulated,
            );
        }
    }
    let mut planted: Vec<Vec<InteractionPair>> = vec![Vec::new(); spec.n_tfs];
    for (g, reg) in regulated_by.iter().enumerate() {
        if let Some((t, sign)) = reg {
            let pair = InteractionPair::new(tf_ids[*t].as_str(), gene_ids[g].as_str());
            truth.insert(pair.clone(), Regulation::Regulated);
            signs.insert(pair.clone(), *sign);
            planted[*t].push(pair);
        }
    }
    let known_per_tf = spec.positives_per_tf - spec.hidden_per_tf();
    let mut positives = BTreeSet::new();
    for edges in planted.iter_mut() {
        edges.sort();
        for i in index::sample(&mut r, edges.len(), known_per_tf) {
            positives.insert(edges[i].clone());
        }
    }

    let ids = all_ids.into_iter().cloned().collect();
    let matrix = ExpressionMatrix::new(ids, m, values).map_err(|e| SynthError(e.to_string()))?;
    Ok(SynthData {
        matrix,
        tf_ids,
        positives,
        truth,
        signs,
    })
}

/// Writes `tf<TAB>target<TAB>regulated|unregulated` lines.
pub fn write_truth<W: Write>(
    truth: &BTreeMap<InteractionPair, Regulation>,
    mut out: W,
) -> std::io::Result<()> {
    for (p, r) in truth {
        let label = match r {
            Regulation::Regulated => "regulated",
            Regulation::Unregulated => "unregulated",
        };
        writeln!(out, "{}\t{}\t{label}", p.tf, p.target)?;
    }
    Ok(())
}
