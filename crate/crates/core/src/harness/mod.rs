//! Experiment driver: configuration, the training loop, metrics and plots.

mod config;
mod experiment;
mod metrics;
mod output;
mod plot;
mod stats;

pub use config::{
    parse_combo, parse_seeds, EnvConfig, ExperimentConfig, RunConfig, SelectionConfig, SweepConfig, TeacherConfig,
};
pub use experiment::{
    build_teachers, evaluate_policy, run_experiment, run_experiment_full, train_oracle_learner, RunOutcome,
};
pub use metrics::{aggregate, emit_csv, read_csv, AggregatePoint, MetricsRow, RunMetrics, CSV_HEADER};
pub use output::{
    final_returns, find_metrics, plot_dir, run_sweep, write_run, Manifest, SweepSummary, TeacherEntry,
    MANIFEST_FILE, METRICS_FILE, PREFERENCES_FILE, REWARD_MODEL_FILE, SUMMARY_FILE,
};
pub use plot::render_svg;
pub use stats::{average_ranks, pearson, spearman, welch_one_sided, WelchTest};
