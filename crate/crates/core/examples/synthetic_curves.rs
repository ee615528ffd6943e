//! Mean validation accuracy per iteration on the default planted dataset,
//! for both classifiers and both learning modes.
//!
//! cargo run --release -p pu-grn --example synthetic_curves [seeds] [svm|rf]

use pu_grn::{
    generate, run_iterations, ClassifierSpec, DatasetSplit, ForestParams, LearningMode, OddSplit,
    RunConfig, SvmParams, SynthSpec,
};

fn main() {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let classifiers = [
        ClassifierSpec::Svm(SvmParams::default()),
        ClassifierSpec::Forest(ForestParams::default()),
    ];
    let only = std::env::args().nth(2);
    for classifier in classifiers
        .iter()
        .filter(|c| only.as_deref().is_none_or(|o| o == c.name()))
    {
        for mode in [LearningMode::Transductive, LearningMode::Inductive] {
            let mut sums = [0.0; 16];
            let mut runs = 0;
            for seed in 0..seeds {
                let data = generate(&SynthSpec {
                    seed,
                    ..Default::default()
                })
                .expect("default spec is valid");
                let matrix = data.matrix.standardize_rows().expect("20 conditions");
                for tf in &data.tf_ids {
                    let split = DatasetSplit::for_tf(
                        tf,
                        &matrix,
                        &data.positives,
                        seed,
                        OddSplit::default(),
                    )
                    .expect("split");
                    let config = RunConfig {
                        mode,
                        classifier: classifier.clone(),
                        seed,
                        ..Default::default()
                    };
                    let trace = run_iterations(&split, &matrix, &config).expect("run");
                    for (s, a) in sums.iter_mut().zip(trace.accuracies()) {
                        *s += a;
                    }
                    runs += 1;
                }
            }
            let curve: Vec<String> = sums
                .iter()
                .map(|s| format!("{:.3}", s / runs as f64))
                .collect();
            println!("{:>3} {:>12}: {}", classifier.name(), mode, curve.join(" "));
        }
    }
}
