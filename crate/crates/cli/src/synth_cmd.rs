//! `pugrn synth`: write a planted dataset in the loader's TSV formats.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pu_grn::datamodel::{write_expression_matrix, write_interactions};
use pu_grn::synth::{write_truth, SynthError};
use pu_grn::{generate, SynthSpec};
use thiserror::Error;

pub const EXPRESSION_FILE: &str = "expression.tsv";
pub const INTERACTIONS_FILE: &str = "interactions.tsv";
pub const TRUTH_FILE: &str = "truth.tsv";

#[derive(Debug, Error)]
pub enum SynthCmdError {
    #[error(transparent)]
    Spec(#[from] SynthError),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub expression: PathBuf,
    pub interactions: PathBuf,
    pub truth: PathBuf,
    pub tf_ids: Vec<String>,
}

/// Validates the spec, then writes the three files into `out_dir`.
/// Nothing is created when validation fails.
pub fn write_synth(spec: &SynthSpec, out_dir: &Path) -> Result<SynthFiles, SynthCmdError> {
    let data = generate(spec)?;
    let conditions: Vec<String> = (1..=spec.n_conditions)
        .map(|c| format!("cond{c:02}"))
        .collect();

    let files = SynthFiles {
        expression: out_dir.join(EXPRESSION_FILE),
        interactions: out_dir.join(INTERACTIONS_FILE),
        truth: out_dir.join(TRUTH_FILE),
        tf_ids: data.tf_ids.clone(),
    };
    let write = |path: &Path, body: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        let run = || -> std::io::Result<()> {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()
        };
        run().map_err(|source| SynthCmdError::Write {
            path: path.to_path_buf(),
            source,
        })
    };
    fs::create_dir_all(out_dir).map_err(|source| SynthCmdError::Write {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write(&files.expression, &|w| {
        write_expression_matrix(&data.matrix, &conditions, w)
    })?;
    write(&files.interactions, &|w| {
        writeln!(w, "# known planted edges; tf<TAB>target")?;
        write_interactions(&data.positives, w)
    })?;
    write(&files.truth, &|w| write_truth(&data.truth, w))?;
    Ok(files)
}
