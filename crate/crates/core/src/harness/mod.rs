//! Experiment harness: configuration, the study matrix, the hyperparameter
//! grid, checkpoints, and the report bundle.

pub mod checkpoint;
pub mod config;
pub mod grid;
pub mod profile;
pub mod records;
pub mod report;
pub mod study;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader, TrainedModel};
pub use config::{fingerprint, ExperimentConfig, OUTPUT_DIR_ENV};
pub use grid::{grid_cells, nearest_rank, run_grid, run_grid_cell, GridCell, GridRecord};
pub use profile::{radial_profile, ProfileRow};
pub use records::{ExperimentRecord, RunStatus};
pub use report::build_report;
pub use study::{evaluate, generate_splits, run_cell, run_study, write_study, Evaluation, StudyOutput};
