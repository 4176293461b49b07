//! Experiment configuration, disorder-ensemble runs and their outputs.

mod config;
mod output;
mod run;
mod stats;

pub use config::*;
pub use output::{
    read_columns, read_manifest, read_summary, replay, snapshot_file, write_experiment,
    write_theory,
};
pub use run::{
    prepare, run_experiment, run_realization, run_surface, run_theory, ExperimentOutput,
    GridRecord, Prepared, RealizationOutput, RealizationRecord, RunManifest, RunStatus,
    SnapshotSummary, Summary, TheoryOutput, WING_BINS,
};
pub use stats::{
    average_densities, binned_ensemble, compare_with_theory, fold, log_bin, ComparisonReport,
    EnsembleResult,
};
