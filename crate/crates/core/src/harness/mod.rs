//! Experiment orchestration: configuration files, shipped assets, seeded
//! multi-run batches and their result files.

pub mod assets;
pub mod batch;
pub mod config;
pub mod output;

pub use assets::{generate_map, load_map_source, GenerateError, MapLoadError, REFERENCE_CSV};
pub use batch::{
    requested_learners, run_batch, run_batch_on, AggregateRow, BatchError, BatchOutput,
    ComparisonReport, CurveTrace, JRow, Learner, RunRow, Stat,
};
pub use config::{parse_config, ConfigError, ExperimentConfig, MapSource};
pub use output::{
    emit_csv, emit_learning_curves, read_results, reassemble, summary_text, write_curves,
    write_outputs, write_reference, write_results, OutputError, NOT_CONVERGED,
};
