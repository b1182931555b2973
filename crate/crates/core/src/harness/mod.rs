//! Configuration, data preparation, the experiment suite, report bundles,
//! the synthetic generator and the command line.

pub mod bundle;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod pipeline;
pub mod synth;

pub use bundle::{config_hash, read_predictions, rescore, ExperimentResult, PredictionRecord, ReportBundle, ShapExport};
pub use config::{ExperimentConfig, ExperimentKind, ExplainMethod, ExplainOptions, ExplainTarget, ModelChoice};
pub use experiments::{
    fit_and_score, largest_drop, longitudinal_task_size, run_ablation, run_baseline, run_explain, run_explore,
    run_ingest, run_longitudinal_compare, run_model_comparison,
};
pub use pipeline::{load_cleaned, prepare, select_features, Cleaned, Prepared};
pub use synth::{generate_synthetic, nlsy_codebook, write_synthetic, SynthSpec, NLSY_YEARS, PAPER_PRIORS};
