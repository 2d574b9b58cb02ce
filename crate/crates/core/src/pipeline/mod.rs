//! End-to-end experiment pipeline: configuration, dataset files, training,
//! similarity evaluation and rate reports.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod experiment;

pub use commands::{cmd_eval, cmd_generate, cmd_rate, cmd_train, load_params, save_params, RateOutput, THREADS_ENV};
pub use config::{BeamConfig, ExperimentConfig, ProjectionConfig, SplitConfig, SpectrumConfig};
pub use dataset::{
    build_record, condition_covariance, experiment_grid, generate_records, read_dataset, write_dataset, DatasetHeader,
    DatasetRecord, SplitRole, FORMAT_VERSION,
};
pub use experiment::{
    beam_setup, coherence_sweep, evaluate_similarity, evaluation_records, nearest_rank, rate_rows, split_records,
    summarize_values, train_config, train_model, training_samples, SimilarityRow, Summary, SweepPoint,
};
