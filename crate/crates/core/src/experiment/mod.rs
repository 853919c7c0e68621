//! Seeded simulation studies: synthetic data, coreset construction,
//! downstream comparison against the full data and the unit coreset, and the
//! files a run leaves behind.

mod config;
mod output;
mod runs;

pub use config::{
    AdaptiveParams, DensityParams, ExperimentConfig, ExperimentKind, LogisticParams, PartitionParams, WeightMode,
};
pub use output::{
    histogram, plot_data_from_results, read_results, render_svg, run_experiment, sha256_hex, summarize,
    summarize_file, write_detail, write_histogram, write_results, ExperimentRun, FileEntry, RepFailure,
    ResultRow, RunManifest, Summary, DETAIL_FILE, HISTOGRAM_FILE, MANIFEST_FILE, RESULTS_FILE, SUMMARY_FILE,
};
pub use runs::{
    build_coreset, density_prior, evaluate_coreset, generate_synthetic, metric_for, partition_spec, rep_dataset,
    rep_seed, run_rep, seeded_dataset, RepDetail, RepOutcome, Truth,
};
