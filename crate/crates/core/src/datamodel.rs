//! Expression matrices, interaction pairs and per-TF dataset splits.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DataError {
    #[error("input is empty")]
    Empty,
    #[error("line {line}: {source}")]
    Io { line: usize, source: IoMessage },
    #[error("line {line}: duplicate gene identifier `{id}`")]
    DuplicateGene { line: usize, id: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cell `{cell}` is not a finite number")]
    NonNumeric { line: usize, cell: String },
    #[error("line {line}: expected `tf<TAB>target`, found `{content}`")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: self-pair `{id}`")]
    SelfPair { line: usize, id: String },
    #[error("unknown gene identifier `{0}`")]
    UnknownGene(String),
    #[error("line {line}: unknown gene identifier `{id}`")]
    UnknownGeneAt { line: usize, id: String },
    #[error("standardization needs at least 2 conditions, matrix has {0}")]
    TooFewConditions(usize),
    #[error("at least 2 positives are needed to split, got {0}")]
    TooFewPositives(usize),
    #[error("matrix shape mismatch: {rows} ids, {values} values, {n_conditions} conditions")]
    Shape {
        rows: usize,
        values: usize,
        n_conditions: usize,
    },
    #[error("pair ({tf}, {target}): {reason}")]
    InvalidPair {
        tf: String,
        target: String,
        reason: String,
    },
}

/// I/O errors are not `PartialEq`; keep the message only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoMessage(pub String);

impl fmt::Display for IoMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for IoMessage {}

/// Per-gene expression profiles, one row per gene, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    gene_ids: Vec<String>,
    index: HashMap<String, usize>,
    n_conditions: usize,
    values: Vec<f64>,
}

impl ExpressionMatrix {
    /// Builds a matrix from row-major values, checking shape, uniqueness and finiteness.
    pub fn new(
        gene_ids: Vec<String>,
        n_conditions: usize,
        values: Vec<f64>,
    ) -> Result<Self, DataError> {
        if n_conditions == 0 || values.len() != gene_ids.len() * n_conditions {
            return Err(DataError::Shape {
                rows: gene_ids.len(),
                values: values.len(),
                n_conditions,
            });
        }
        let mut index = HashMap::with_capacity(gene_ids.len());
        for (row, id) in gene_ids.iter().enumerate() {
            if index.insert(id.clone(), row).is_some() {
                return Err(DataError::DuplicateGene {
                    line: row + 2,
                    id: id.clone(),
                });
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonNumeric {
                line: pos / n_conditions + 2,
                cell: values[pos].to_string(),
            });
        }
        Ok(ExpressionMatrix {
            gene_ids,
            index,
            n_conditions,
            values,
        })
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn n_genes(&self) -> usize {
        self.gene_ids.len()
    }

    pub fn n_conditions(&self) -> usize {
        self.n_conditions
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_conditions..(row + 1) * self.n_conditions]
    }

    /// Expression profile of a gene, if present.
    pub fn profile(&self, id: &str) -> Option<&[f64]> {
        self.row_index(id).map(|r| self.row(r))
    }

    /// Scales every row to zero mean and unit population standard deviation.
    ///
    /// Constant rows become all zeros.
    pub fn standardize_rows(&self) -> Result<ExpressionMatrix, DataError> {
        if self.n_conditions < 2 {
            return Err(DataError::TooFewConditions(self.n_conditions));
        }
        let mut values = self.values.clone();
        for row in values.chunks_mut(self.n_conditions) {
            standardize_in_place(row);
        }
        Ok(ExpressionMatrix {
            gene_ids: self.gene_ids.clone(),
            index: self.index.clone(),
            n_conditions: self.n_conditions,
            values,
        })
    }
}

/// Zero-mean, unit population-std scaling of one vector; constant vectors
/// (spread below rounding noise) map to zeros.
pub(crate) fn standardize_in_place(xs: &mut [f64]) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
    if std <= 64.0 * f64::EPSILON * scale {
        xs.iter_mut().for_each(|x| *x = 0.0);
    } else {
        xs.iter_mut().for_each(|x| *x = (*x - mean) / std);
    }
}

fn io_err(line: usize, e: std::io::Error) -> DataError {
    DataError::Io {
        line,
        source: IoMessage(e.to_string()),
    }
}

/// Reads a tab-separated matrix: a header naming the conditions, then
/// `gene_id<TAB>v1<TAB>...<TAB>vM` per line. Blank lines are skipped.
pub fn load_expression_matrix<R: BufRead>(source: R) -> Result<ExpressionMatrix, DataError> {
    let mut lines = source.lines().enumerate();
    let n_conditions = loop {
        match lines.next() {
            None => return Err(DataError::Empty),
            Some((i, line)) => {
                let line = line.map_err(|e| io_err(i + 1, e))?;
                let line = line.trim_end_matches('\r');
                if line.trim().is_empty() {
                    continue;
                }
                let n = line.split('\t').count() - 1;
                if n == 0 {
                    return Err(DataError::RaggedRow {
                        line: i + 1,
                        expected: 1,
                        found: 0,
                    });
                }
                break n;
            }
        }
    };

    let mut gene_ids = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| io_err(lineno, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split('\t');
        let id = cells.next().unwrap_or_default().trim().to_string();
        let row: Vec<&str> = cells.collect();
        if row.len() != n_conditions {
            return Err(DataError::RaggedRow {
                line: lineno,
                expected: n_conditions,
                found: row.len(),
            });
        }
        if seen.insert(id.clone(), lineno).is_some() {
            return Err(DataError::DuplicateGene { line: lineno, id });
        }
        for cell in row {
            let v: f64 = cell
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| DataError::NonNumeric {
                    line: lineno,
                    cell: cell.to_string(),
                })?;
            values.push(v);
        }
        gene_ids.push(id);
    }
    if gene_ids.is_empty() {
        return Err(DataError::Empty);
    }
    ExpressionMatrix::new(gene_ids, n_conditions, values)
}

/// Ordered (TF, target) pair. Ordering is lexicographic on (tf, target).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InteractionPair {
    pub tf: String,
    pub target: String,
}

impl InteractionPair {
    pub fn new(tf: impl Into<String>, target: impl Into<String>) -> Self {
        InteractionPair {
            tf: tf.into(),
            target: target.into(),
        }
    }
}

impl fmt::Display for InteractionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.tf, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairLabel {
    Positive,
    Unlabeled,
}

/// Reads `tf<TAB>target` lines; `#` lines and blank lines are ignored.
pub fn load_interactions<R: BufRead>(
    source: R,
    matrix: &ExpressionMatrix,
) -> Result<BTreeSet<InteractionPair>, DataError> {
    let mut out = BTreeSet::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| io_err(lineno, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(DataError::MalformedLine {
                line: lineno,
                content: line.to_string(),
            });
        }
        let (tf, target) = (fields[0], fields[1]);
        if tf == target {
            return Err(DataError::SelfPair {
                line: lineno,
                id: tf.to_string(),
            });
        }
        for id in [tf, target] {
            if !matrix.contains(id) {
                return Err(DataError::UnknownGeneAt {
                    line: lineno,
                    id: id.to_string(),
                });
            }
        }
        out.insert(InteractionPair::new(tf, target));
    }
    Ok(out)
}

/// Every `(tf_id, g)` with `g != tf_id` that is not in `known`.
pub fn generate_unlabeled(
    tf_id: &str,
    matrix: &ExpressionMatrix,
    known: &BTreeSet<InteractionPair>,
) -> Result<BTreeSet<InteractionPair>, DataError> {
    if !matrix.contains(tf_id) {
        return Err(DataError::UnknownGene(tf_id.to_string()));
    }
    Ok(matrix
        .gene_ids()
        .iter()
        .filter(|g| g.as_str() != tf_id)
        .map(|g| InteractionPair::new(tf_id, g.as_str()))
        .filter(|p| !known.contains(p))
        .collect())
}

/// Which side of a positive split receives the extra example when the
/// count is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OddSplit {
    /// |P| = ⌈n/2⌉, |V| = ⌊n/2⌋.
    #[default]
    ExtraToTraining,
    /// |P| = ⌊n/2⌋, |V| = ⌈n/2⌉.
    ExtraToValidation,
}

/// Random partition of the positives into training (P) and validation (V)
/// halves, with the odd example going to P.
pub fn split_positive(
    positives: &BTreeSet<InteractionPair>,
    seed: u64,
) -> Result<(BTreeSet<InteractionPair>, BTreeSet<InteractionPair>), DataError> {
    split_positive_with(positives, seed, OddSplit::ExtraToTraining)
}

pub fn split_positive_with(
    positives: &BTreeSet<InteractionPair>,
    seed: u64,
    odd: OddSplit,
) -> Result<(BTreeSet<InteractionPair>, BTreeSet<InteractionPair>), DataError> {
    let n = positives.len();
    if n < 2 {
        return Err(DataError::TooFewPositives(n));
    }
    let mut shuffled: Vec<&InteractionPair> = positives.iter().collect();
    shuffled.shuffle(&mut rng::seeded(seed));
    let n_train = match odd {
        OddSplit::ExtraToTraining => n.div_ceil(2),
        OddSplit::ExtraToValidation => n / 2,
    };
    let train = shuffled[..n_train].iter().map(|&p| p.clone()).collect();
    let validation = shuffled[n_train..].iter().map(|&p| p.clone()).collect();
    Ok((train, validation))
}

/// The sets P, V and Unlabeled for one transcription factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub tf_id: String,
    pub train_positives: BTreeSet<InteractionPair>,
    pub validation: BTreeSet<InteractionPair>,
    pub unlabeled: BTreeSet<InteractionPair>,
}

impl DatasetSplit {
    /// Builds the split for `tf_id` from the full known-interaction set:
    /// its positives are those known pairs whose TF is `tf_id`.
    pub fn for_tf(
        tf_id: &str,
        matrix: &ExpressionMatrix,
        known: &BTreeSet<InteractionPair>,
        seed: u64,
        odd: OddSplit,
    ) -> Result<DatasetSplit, DataError> {
        let positives: BTreeSet<InteractionPair> =
            known.iter().filter(|p| p.tf == tf_id).cloned().collect();
        let unlabeled = generate_unlabeled(tf_id, matrix, known)?;
        let (train_positives, validation) = split_positive_with(&positives, seed, odd)?;
        Ok(DatasetSplit {
            tf_id: tf_id.to_string(),
            train_positives,
            validation,
            unlabeled,
        })
    }

    /// Assembles a split from parts, checking disjointness and balance.
    pub fn from_parts(
        tf_id: &str,
        train_positives: BTreeSet<InteractionPair>,
        validation: BTreeSet<InteractionPair>,
        unlabeled: BTreeSet<InteractionPair>,
    ) -> Result<DatasetSplit, DataError> {
        let overlap = train_positives
            .intersection(&validation)
            .chain(train_positives.intersection(&unlabeled))
            .chain(validation.intersection(&unlabeled))
            .next();
        if let Some(p) = overlap {
            return Err(DataError::InvalidPair {
                tf: p.tf.clone(),
                target: p.target.clone(),
                reason: "pair appears in more than one of P, V, Unlabeled".into(),
            });
        }
        if let Some(p) = train_positives
            .iter()
            .chain(&validation)
            .chain(&unlabeled)
            .find(|p| p.tf != tf_id || p.tf == p.target)
        {
            return Err(DataError::InvalidPair {
                tf: p.tf.clone(),
                target: p.target.clone(),
                reason: format!("not a valid pair for TF {tf_id}"),
            });
        }
        let total = train_positives.len() + validation.len();
        if total < 2 {
            return Err(DataError::TooFewPositives(total));
        }
        Ok(DatasetSplit {
            tf_id: tf_id.to_string(),
            train_positives,
            validation,
            unlabeled,
        })
    }
}

/// Writes a matrix in the format read by [`load_expression_matrix`].
/// Values use the shortest representation that parses back to the same bits.
pub fn write_expression_matrix<W: Write>(
    matrix: &ExpressionMatrix,
    condition_names: &[String],
    mut out: W,
) -> std::io::Result<()> {
    write!(out, "gene_id")?;
    for c in 0..matrix.n_conditions() {
        match condition_names.get(c) {
            Some(name) => write!(out, "\t{name}")?,
            None => write!(out, "\tc{}", c + 1)?,
        }
    }
    writeln!(out)?;
    for (row, id) in matrix.gene_ids().iter().enumerate() {
        write!(out, "{id}")?;
        for v in matrix.row(row) {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes `tf<TAB>target` lines in set order.
pub fn write_interactions<'a, W, I>(pairs: I, mut out: W) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a InteractionPair>,
{
    for p in pairs {
        writeln!(out, "{}\t{}", p.tf, p.target)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix(ids: &[&str], n: usize) -> ExpressionMatrix {
        let values = (0..ids.len() * n).map(|v| v as f64).collect();
        ExpressionMatrix::new(ids.iter().map(|s| s.to_string()).collect(), n, values).unwrap()
    }

    #[test]
    fn parses_well_formed_matrix() {
        let text = "gene_id\tc1\tc2\tc3\tc4\nb0001\t1\t2\t3\t4\nb0002\t0.5\t-1\t2e1\t0\nb0003\t1\t1\t1\t1\n";
        let m = load_expression_matrix(text.as_bytes()).unwrap();
        assert_eq!(m.gene_ids(), ["b0001", "b0002", "b0003"]);
        assert_eq!(m.n_conditions(), 4);
        assert_eq!(m.profile("b0002").unwrap(), [0.5, -1.0, 20.0, 0.0]);
    }

    #[test]
    fn duplicate_gene_names_line() {
        let text = "gene_id\tc1\nb0001\t1\nb0001\t2\n";
        assert_eq!(
            load_expression_matrix(text.as_bytes()),
            Err(DataError::DuplicateGene {
                line: 3,
                id: "b0001".into()
            })
        );
    }

    #[test]
    fn ragged_row_is_rejected() {
        let text = "gene_id\tc1\tc2\tc3\tc4\na\t1\t2\t3\t4\nb\t1\t2\t3\n";
        assert_eq!(
            load_expression_matrix(text.as_bytes()),
            Err(DataError::RaggedRow {
                line: 3,
                expected: 4,
                found: 3
            })
        );
    }

    #[test]
    fn non_numeric_and_empty_inputs() {
        let text = "gene_id\tc1\na\tx\n";
        assert!(matches!(
            load_expression_matrix(text.as_bytes()),
            Err(DataError::NonNumeric { line: 2, .. })
        ));
        let text = "gene_id\tc1\na\tNaN\n";
        assert!(matches!(
            load_expression_matrix(text.as_bytes()),
            Err(DataError::NonNumeric { line: 2, .. })
        ));
        assert_eq!(load_expression_matrix(&b""[..]), Err(DataError::Empty));
        assert_eq!(
            load_expression_matrix(&b"gene_id\tc1\n"[..]),
            Err(DataError::Empty)
        );
    }

    #[test]
    fn standardize_known_row() {
        let m = ExpressionMatrix::new(vec!["a".into()], 3, vec![1.0, 2.0, 3.0]).unwrap();
        let s = m.standardize_rows().unwrap();
        let expected = 1.224_744_871_391_589;
        assert_abs_diff_eq!(s.row(0)[0], -expected, epsilon = 1e-12);
        assert_abs_diff_eq!(s.row(0)[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.row(0)[2], expected, epsilon = 1e-12);

        let twice = s.standardize_rows().unwrap();
        for (a, b) in s.row(0).iter().zip(twice.row(0)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_row_maps_to_zero() {
        let m = ExpressionMatrix::new(
            vec!["a".into(), "b".into()],
            3,
            vec![5.0, 5.0, 5.0, 0.1, 0.1, 0.1],
        )
        .unwrap();
        let s = m.standardize_rows().unwrap();
        assert_eq!(s.row(0), [0.0; 3]);
        assert_eq!(s.row(1), [0.0; 3]);
    }

    #[test]
    fn standardize_needs_two_conditions() {
        let m = ExpressionMatrix::new(vec!["a".into()], 1, vec![1.0]).unwrap();
        assert_eq!(m.standardize_rows(), Err(DataError::TooFewConditions(1)));
    }

    #[test]
    fn interactions_parse_dedup_and_validate() {
        let m = matrix(&["crp", "fnr", "aceE"], 2);
        let text = "# known\ncrp\taceE\nfnr\taceE\n\ncrp\taceE\n";
        let set = load_interactions(text.as_bytes(), &m).unwrap();
        assert_eq!(set.len(), 2);

        let err = load_interactions(&b"crp\tzzz\n"[..], &m).unwrap_err();
        assert_eq!(
            err,
            DataError::UnknownGeneAt {
                line: 1,
                id: "zzz".into()
            }
        );
        assert!(matches!(
            load_interactions(&b"crp\tcrp\n"[..], &m),
            Err(DataError::SelfPair { .. })
        ));
        assert!(matches!(
            load_interactions(&b"crp aceE\n"[..], &m),
            Err(DataError::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn unlabeled_universe_counts() {
        let m = matrix(&["t", "a", "b", "c"], 2);
        let none = BTreeSet::new();
        assert_eq!(generate_unlabeled("t", &m, &none).unwrap().len(), 3);
        let all: BTreeSet<_> = ["a", "b", "c"]
            .iter()
            .map(|g| InteractionPair::new("t", *g))
            .collect();
        assert!(generate_unlabeled("t", &m, &all).unwrap().is_empty());
        // known pairs of other TFs do not shrink this TF's universe
        let other: BTreeSet<_> = [InteractionPair::new("a", "b")].into_iter().collect();
        assert_eq!(generate_unlabeled("t", &m, &other).unwrap().len(), 3);
        assert_eq!(
            generate_unlabeled("zz", &m, &none),
            Err(DataError::UnknownGene("zz".into()))
        );
    }

    #[test]
    fn split_sizes_and_determinism() {
        let pos: BTreeSet<_> = (0..239)
            .map(|i| InteractionPair::new("fnr", format!("g{i}")))
            .collect();
        let (p, v) = split_positive(&pos, 11).unwrap();
        assert_eq!((p.len(), v.len()), (120, 119));
        assert!(p.is_disjoint(&v));
        assert_eq!(split_positive(&pos, 11).unwrap(), (p.clone(), v.clone()));
        assert_ne!(split_positive(&pos, 12).unwrap().0, p);

        let (p, v) = split_positive_with(&pos, 11, OddSplit::ExtraToValidation).unwrap();
        assert_eq!((p.len(), v.len()), (119, 120));

        let one: BTreeSet<_> = [InteractionPair::new("a", "b")].into_iter().collect();
        assert_eq!(split_positive(&one, 0), Err(DataError::TooFewPositives(1)));
    }

    #[test]
    fn writers_round_trip() {
        let m = ExpressionMatrix::new(
            vec!["a".into(), "b".into()],
            2,
            vec![0.1, -1.0 / 3.0, 1e-300, 7.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_expression_matrix(&m, &[], &mut buf).unwrap();
        assert_eq!(load_expression_matrix(buf.as_slice()).unwrap(), m);

        let pairs: BTreeSet<_> = [InteractionPair::new("a", "b")].into_iter().collect();
        let mut buf = Vec::new();
        write_interactions(&pairs, &mut buf).unwrap();
        assert_eq!(load_interactions(buf.as_slice(), &m).unwrap(), pairs);
    }

    #[test]
    fn from_parts_rejects_overlap() {
        let a = InteractionPair::new("t", "a");
        let b = InteractionPair::new("t", "b");
        let set = |ps: &[&InteractionPair]| ps.iter().map(|&p| p.clone()).collect::<BTreeSet<_>>();
        assert!(DatasetSplit::from_parts("t", set(&[&a]), set(&[&b]), set(&[])).is_ok());
        assert!(DatasetSplit::from_parts("t", set(&[&a]), set(&[&b]), set(&[&a])).is_err());
    }
}
