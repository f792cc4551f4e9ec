//! Experiment orchestration: configuration, training runs, evaluation
//! checkpoints, summary statistics and ablation groups.

mod ablation;
pub mod config;
mod metrics;
mod plots;
mod stats;
mod train;

pub use ablation::{
    compare_groups, pool_best_neighborhood, run_ablation, summarize_group, AblationGroup,
    GroupResult, NEIGHBORHOOD,
};
pub use config::{load_config, Algorithm, ExperimentConfig, GraphMode, RawConfig, TrainEvery};
pub use metrics::{
    aggregate_rows, best_checkpoint_samples, max_average_return, read_metrics_csv,
    seed_values_at, write_metrics_csv, MetricsRecord, METRICS_HEADER,
};
pub use plots::{plot_tables, PLOT_HEADER};
pub use stats::{bootstrap_ci, mean, rank_compare, Comparison};
pub use train::{summarize, train, train_seed, write_run, Checkpoint, RunResult, SeedResult};
