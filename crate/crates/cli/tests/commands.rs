use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pugrn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pugrn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn line_count(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

fn synth_into(dir: &Path, seed: &str) {
    let out = pugrn(&["synth", "--seed", seed], dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_defaults_write_three_files() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(tmp.path(), "1");
    // header + 200 genes; 4 TFs x 20 known edges (+ comment); 4 x 199 pairs
    assert_eq!(line_count(&tmp.path().join("expression.tsv")), 201);
    assert_eq!(line_count(&tmp.path().join("interactions.tsv")), 81);
    assert_eq!(line_count(&tmp.path().join("truth.tsv")), 4 * 199);
    let regulated = std::fs::read_to_string(tmp.path().join("truth.tsv"))
        .unwrap()
        .lines()
        .filter(|l| l.ends_with("\tregulated"))
        .count();
    assert_eq!(regulated, 160);
}

#[test]
fn synth_same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth_into(a.path(), "5");
    synth_into(b.path(), "5");
    for f in ["expression.tsv", "interactions.tsv", "truth.tsv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn synth_invalid_spec_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("never");
    let out = pugrn(&["synth", "--positives-per-tf", "200"], &out_dir);
    assert!(!out.status.success());
    assert!(!out_dir.exists());
}

fn write_manifest(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("jobs.txt");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_two_jobs_writes_traces_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(&tmp.path().join("data"), "2");
    let manifest = write_manifest(
        tmp.path(),
        "expression = data/expression.tsv\ninteractions = data/interactions.tsv\ntf = tf00\noutput = first\n\n\
         expression = data/expression.tsv\ninteractions = data/interactions.tsv\ntf = tf01\nclassifier = rf\nn_trees = 40\noutput = second\n",
    );
    let res = tmp.path().join("res");
    let out = pugrn(
        &["run", manifest.to_str().unwrap(), "--iterations", "5"],
        &res,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    for job in ["first", "second"] {
        let csv = std::fs::read_to_string(res.join(job).join("trace.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iteration,accuracy"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 6);
        for (k, row) in rows.iter().enumerate() {
            let (i, a) = row.split_once(',').unwrap();
            assert_eq!(i.parse::<usize>().unwrap(), k);
            assert!((0.0..=1.0).contains(&a.parse::<f64>().unwrap()));
        }
    }

    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(res.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    let jobs = summary["jobs"].as_array().unwrap();
    assert_eq!(jobs.len(), 2);
    assert_eq!(jobs[0]["output"], "first");
    assert_eq!(jobs[1]["output"], "second");
    for j in jobs {
        assert_eq!(j["status"], "ok");
        assert_eq!(j["accuracies"].as_array().unwrap().len(), 6);
        assert_eq!(j["iterations"], 5);
        assert!(j["duration_secs"].as_f64().unwrap() >= 0.0);
        // |N^K| = |P| = 10 for 20 known positives
        assert_eq!(j["final_negatives"].as_array().unwrap().len(), 10);
    }
    assert_eq!(jobs[1]["classifier"]["classifier"], "rf");
    assert_eq!(jobs[1]["classifier"]["n_trees"], 40);
}

#[test]
fn missing_file_fails_only_that_job() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(&tmp.path().join("data"), "3");
    let manifest = write_manifest(
        tmp.path(),
        "expression = data/nope.tsv\ninteractions = data/interactions.tsv\ntf = tf00\noutput = broken\n\n\
         expression = data/expression.tsv\ninteractions = data/interactions.tsv\ntf = tf00\noutput = fine\n",
    );
    let res = tmp.path().join("res");
    let out = pugrn(
        &["run", manifest.to_str().unwrap(), "--iterations", "2"],
        &res,
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.tsv"));
    assert!(res.join("fine").join("trace.csv").exists());
    assert!(!res.join("broken").exists());

    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(res.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["jobs"][0]["status"], "failed");
    assert!(summary["jobs"][0]["error"]
        .as_str()
        .unwrap()
        .contains("nope.tsv"));
    assert_eq!(summary["jobs"][1]["status"], "ok");
}

#[test]
fn unknown_tf_is_a_job_failure() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(&tmp.path().join("data"), "3");
    let manifest = write_manifest(
        tmp.path(),
        "expression = data/expression.tsv\ninteractions = data/interactions.tsv\ntf = nosuchtf\n",
    );
    let out = pugrn(
        &["run", manifest.to_str().unwrap()],
        &tmp.path().join("res"),
    );
    assert!(!out.status.success());
}

#[test]
fn bad_manifest_is_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        tmp.path(),
        "expression = a\ninteractions = b\ntf = x\nflavour = sweet\n",
    );
    let res = tmp.path().join("res");
    let out = pugrn(&["run", manifest.to_str().unwrap()], &res);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("flavour"));
    assert!(!res.join("summary.json").exists());
}

fn sweep(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "sweep".to_string(),
        "--expression".into(),
        dir.join("data/expression.tsv").display().to_string(),
        "--interactions".into(),
        dir.join("data/interactions.tsv").display().to_string(),
        "--tf".into(),
        "tf00,tf01".into(),
        "--iterations".into(),
        "3".into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    pugrn(&args, &dir.join("sweep"))
}

#[test]
fn sweeps_write_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(&tmp.path().join("data"), "4");
    let out = sweep(
        tmp.path(),
        &["--axis", "kernel", "--values", "rbf,linear,polynomial"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(tmp.path().join("sweep/comparison.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "value,final_accuracy");
    let values: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(values, ["rbf", "linear", "polynomial"]);

    let out = sweep(
        tmp.path(),
        &[
            "--classifier",
            "rf",
            "--axis",
            "n_trees",
            "--values",
            "10,20",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(line_count(&tmp.path().join("sweep/comparison.csv")), 3);
}

#[test]
fn sweep_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(&tmp.path().join("data"), "4");
    let empty = sweep(tmp.path(), &["--axis", "kernel", "--values"]);
    assert_eq!(empty.status.code(), Some(2));
    let mismatch = sweep(tmp.path(), &["--axis", "n_trees", "--values", "100"]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("does not apply"));
    let bad_axis = sweep(tmp.path(), &["--axis", "depth", "--values", "3"]);
    assert_eq!(bad_axis.status.code(), Some(2));
}
