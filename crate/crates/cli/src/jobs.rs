//! Job execution and result files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pu_grn::{
    load_expression_matrix, load_interactions, run_iterations, run_pn_bootstrap, DataError,
    DatasetSplit, ExpressionMatrix, IterationTrace, PuError, RunConfig,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::manifest::JobSpec;

#[derive(Debug, Error)]
pub enum JobError {
    #[error("{path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: DataError },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Run(#[from] PuError),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Formats like C's `%.6g`: six significant digits, trailing zeros trimmed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    // rounding can carry into the next decade (e.g. 9.999996)
    let rounded: f64 = format!("{:.5e}", x).parse().unwrap_or(x);
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) {
        exp + 1
    } else {
        exp
    };
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let s = format!("{:.5e}", x);
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        let e: i32 = e.parse().unwrap_or(0);
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if e < 0 { '-' } else { '+' },
            e.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes the `iteration,accuracy` trace.
pub fn write_trace_csv<W: Write>(accuracies: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,accuracy")?;
    for (k, a) in accuracies.iter().enumerate() {
        writeln!(out, "{k},{}", format_sig6(*a))?;
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>, JobError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| JobError::Open {
            path: path.to_path_buf(),
            source,
        })
}

/// Loads and row-standardizes the expression matrix, then the interactions.
pub fn load_inputs(
    expression: &Path,
    interactions: &Path,
) -> Result<
    (
        ExpressionMatrix,
        std::collections::BTreeSet<pu_grn::InteractionPair>,
    ),
    JobError,
> {
    let raw = load_expression_matrix(open(expression)?).map_err(|source| JobError::Parse {
        path: expression.to_path_buf(),
        source,
    })?;
    let matrix = raw.standardize_rows()?;
    let known =
        load_interactions(open(interactions)?, &matrix).map_err(|source| JobError::Parse {
            path: interactions.to_path_buf(),
            source,
        })?;
    Ok((matrix, known))
}

/// Runs one job in memory.
pub fn execute_job(job: &JobSpec) -> Result<IterationTrace, JobError> {
    let (matrix, known) = load_inputs(&job.expression_path, &job.interactions_path)?;
    let split = DatasetSplit::for_tf(&job.tf_id, &matrix, &known, job.seed, job.odd_split)?;
    let config = RunConfig {
        mode: job.mode,
        classifier: job.classifier.clone(),
        iterations: job.iterations,
        seed: job.seed,
        threshold: job.threshold,
    };
    let trace = if job.positive_count > 0 {
        run_pn_bootstrap(&split, &matrix, &config, job.positive_count)?
    } else {
        run_iterations(&split, &matrix, &config)?
    };
    Ok(trace)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Ok,
    Failed,
}

/// One entry of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    #[serde(flatten)]
    pub job: JobSpec,
    pub status: JobStatus,
    pub error: Option<String>,
    pub accuracies: Vec<f64>,
    /// N^K as (tf, target) pairs.
    pub final_negatives: Vec<[String; 2]>,
    pub trace_csv: Option<PathBuf>,
    pub duration_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub jobs: Vec<ResultRecord>,
}

impl Summary {
    pub fn all_ok(&self) -> bool {
        self.jobs.iter().all(|r| matches!(r.status, JobStatus::Ok))
    }
}

fn run_and_write(job: &JobSpec, out_dir: &Path) -> ResultRecord {
    let start = Instant::now();
    let result = execute_job(job).and_then(|trace| {
        let dir = out_dir.join(&job.output);
        let path = dir.join("trace.csv");
        let write = || -> std::io::Result<()> {
            fs::create_dir_all(&dir)?;
            let mut w = BufWriter::new(File::create(&path)?);
            write_trace_csv(&trace.accuracies(), &mut w)?;
            w.flush()
        };
        write().map_err(|source| JobError::Write {
            path: path.clone(),
            source,
        })?;
        Ok((trace, path))
    });
    let duration_secs = start.elapsed().as_secs_f64();
    match result {
        Ok((trace, path)) => ResultRecord {
            job: job.clone(),
            status: JobStatus::Ok,
            error: None,
            accuracies: trace.accuracies(),
            final_negatives: trace
                .final_state()
                .negatives
                .iter()
                .map(|p| [p.tf.clone(), p.target.clone()])
                .collect(),
            trace_csv: Some(path),
            duration_secs,
        },
        Err(e) => ResultRecord {
            job: job.clone(),
            status: JobStatus::Failed,
            error: Some(e.to_string()),
            accuracies: Vec::new(),
            final_negatives: Vec::new(),
            trace_csv: None,
            duration_secs,
        },
    }
}

/// Runs every job on a pool of `workers` threads, writes one trace CSV per
/// successful job and `summary.json` (in manifest order) into `out_dir`.
pub fn run_jobs(jobs: &[JobSpec], out_dir: &Path, workers: usize) -> Result<Summary, JobError> {
    fs::create_dir_all(out_dir).map_err(|source| JobError::Write {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let records: Vec<ResultRecord> =
        pool.install(|| jobs.par_iter().map(|j| run_and_write(j, out_dir)).collect());
    let summary = Summary {
        schema_version: 1,
        jobs: records,
    };
    let path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, json + "\n").map_err(|source| JobError::Write { path, source })?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(0.875), "0.875");
        assert_eq!(format_sig6(0.123456789), "0.123457");
        assert_eq!(format_sig6(2.0 / 3.0), "0.666667");
        assert_eq!(format_sig6(0.9999996), "1");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(0.0000123456), "1.23456e-05");
        assert_eq!(format_sig6(0.000123456), "0.000123456");
    }

    #[test]
    fn trace_csv_layout() {
        let mut buf = Vec::new();
        write_trace_csv(&[0.5, 0.75, 1.0], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iteration,accuracy\n0,0.5\n1,0.75\n2,1\n"
        );
    }
}
