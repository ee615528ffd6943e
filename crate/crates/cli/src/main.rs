use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use pu_grn::{LearningMode, OddSplit, SynthSpec};
use pu_grn_cli::jobs::{load_inputs, JobStatus};
use pu_grn_cli::{
    parse_manifest, run_jobs, run_sweep, write_comparison_csv, write_synth, Axis, ClassifierArgs,
    JobDefaults, SweepError, SweepPlan,
};

/// Positive-unlabeled learning of gene regulatory networks.
#[derive(Parser, Debug)]
#[command(name = "pugrn", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Refinement iterations K.
    #[arg(long, global = true, default_value_t = 15)]
    iterations: usize,
    #[arg(long, global = true, default_value = "transductive")]
    mode: LearningMode,
    /// svm or rf
    #[arg(long, global = true, default_value = "svm")]
    classifier: String,
    /// Maximum number of concurrent runs (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every job of a manifest.
    Run { manifest: PathBuf },
    /// Vary one classifier setting over a fixed set of runs.
    Sweep(SweepArgs),
    /// Write a planted synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    expression: PathBuf,
    #[arg(long)]
    interactions: PathBuf,
    /// TF ids (comma separated or repeated).
    #[arg(long = "tf", value_delimiter = ',', required = true)]
    tfs: Vec<String>,
    /// kernel or n_trees
    #[arg(long)]
    axis: Axis,
    /// Comma separated values, e.g. rbf,linear,polynomial or 100,500,1000.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<String>,
    /// Seeds per TF, counting up from --seed.
    #[arg(long, default_value_t = 1)]
    replicates: u64,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Put the odd positive into validation instead of training.
    #[arg(long)]
    odd_to_validation: bool,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct ParamArgs {
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    coef0: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long)]
    min_leaf: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    n_genes: usize,
    #[arg(long, default_value_t = 20)]
    n_conditions: usize,
    #[arg(long, default_value_t = 4)]
    n_tfs: usize,
    #[arg(long, default_value_t = 40)]
    positives_per_tf: usize,
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    strength: f64,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    /// Fraction of planted edges kept out of interactions.tsv.
    #[arg(long, default_value_t = 0.5)]
    hidden_fraction: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.global.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Run { ref manifest } => cmd_run(&cli.global, manifest),
        Command::Sweep(ref args) => cmd_sweep(&cli.global, args),
        Command::Synth(ref args) => cmd_synth(&cli.global, args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn workers(global: &Global) -> usize {
    global
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn cmd_run(global: &Global, manifest: &Path) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(manifest)
        .with_context(|| format!("reading {}", manifest.display()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let defaults = JobDefaults {
        classifier: global.classifier.clone(),
        mode: global.mode,
        iterations: global.iterations,
        seed: global.seed,
    };
    let jobs = parse_manifest(&text, base, &defaults)
        .with_context(|| format!("parsing {}", manifest.display()))?;
    let summary = run_jobs(&jobs, &global.out, workers(global))?;
    for r in &summary.jobs {
        match r.status {
            JobStatus::Ok => {
                let last = r.accuracies.last().copied().unwrap_or(f64::NAN);
                println!("ok     {:<24} final accuracy {last:.4}", r.job.output);
            }
            JobStatus::Failed => {
                eprintln!(
                    "failed {:<24} {}",
                    r.job.output,
                    r.error.as_deref().unwrap_or("unknown error")
                );
            }
        }
    }
    Ok(if summary.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_sweep(global: &Global, args: &SweepArgs) -> anyhow::Result<ExitCode> {
    let p = &args.params;
    let base = ClassifierArgs {
        classifier: global.classifier.clone(),
        kernel: p.kernel.clone(),
        gamma: p.gamma,
        degree: p.degree,
        coef0: p.coef0,
        c: p.c,
        n_trees: p.n_trees,
        mtry: p.mtry,
        min_leaf: p.min_leaf,
    }
    .build()
    .map_err(anyhow::Error::msg)?;
    let plan = SweepPlan {
        tfs: args.tfs.clone(),
        seeds: (0..args.replicates).map(|r| global.seed + r).collect(),
        mode: global.mode,
        iterations: global.iterations,
        threshold: args.threshold,
        odd_split: if args.odd_to_validation {
            OddSplit::ExtraToValidation
        } else {
            OddSplit::ExtraToTraining
        },
        base,
        axis: args.axis,
        values: args.values.clone(),
    };
    // usage problems are reported before any data is read
    if let Err(e) = pu_grn_cli::sweep::expand_axis(&plan.base, plan.axis, &plan.values) {
        eprintln!("error: {e}");
        return Ok(ExitCode::from(2));
    }
    let (matrix, known) = load_inputs(&args.expression, &args.interactions)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers(global))
        .build()?;
    let rows = match pool.install(|| run_sweep(&matrix, &known, &plan)) {
        Ok(rows) => rows,
        Err(e @ (SweepError::NoValues | SweepError::AxisMismatch { .. })) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };
    std::fs::create_dir_all(&global.out)?;
    let path = global.out.join("comparison.csv");
    let mut buf = Vec::new();
    write_comparison_csv(&rows, &mut buf)?;
    std::fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
    for r in &rows {
        println!("{:<12} {:.4}", r.value, r.final_accuracy);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(global: &Global, args: &SynthArgs) -> anyhow::Result<ExitCode> {
    let spec = SynthSpec {
        n_genes: args.n_genes,
        n_conditions: args.n_conditions,
        n_tfs: args.n_tfs,
        positives_per_tf: args.positives_per_tf,
        regulation_strength: args.strength,
        noise_std: args.noise,
        hidden_fraction: args.hidden_fraction,
        seed: global.seed,
    };
    let files = write_synth(&spec, &global.out)?;
    println!("wrote {}", files.expression.display());
    println!("wrote {}", files.interactions.display());
    println!("wrote {}", files.truth.display());
    println!("tfs: {}", files.tf_ids.join(","));
    Ok(ExitCode::SUCCESS)
}
