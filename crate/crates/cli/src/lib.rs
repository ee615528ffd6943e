//! Experiment harness behind the `pugrn` binary.

pub mod jobs;
pub mod manifest;
pub mod sweep;
pub mod synth_cmd;

pub use jobs::{
    execute_job, format_sig6, run_jobs, write_trace_csv, JobError, ResultRecord, Summary,
};
pub use manifest::{parse_manifest, ClassifierArgs, JobDefaults, JobSpec, ManifestError};
pub use sweep::{run_sweep, write_comparison_csv, Axis, SweepError, SweepPlan, SweepRow};
pub use synth_cmd::{write_synth, SynthCmdError, SynthFiles};
