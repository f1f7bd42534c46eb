//! Command-line driver: data generation, single-design CFD and Bayesian
//! shape optimization over the `anvil-core` pipeline.

mod cfd;
mod cli;
mod datagen;
mod error;
mod manifest;
mod optimize;
mod pipeline;

pub use cfd::{run_cfd, CfdInput, CfdReport, CASE_DIR, FIELD_FILE, MESH_FILE, REPORT_FILE};
pub use cli::{run, Cli, Command, CommonArgs, CfdArgs};
pub use datagen::{
    dataset_header, read_dataset, run_data_generation, run_data_generation_with, DatasetRow, SampleOutcome,
    DATASET_FILE, DATASET_META_FILE,
};
pub use error::CliError;
pub use manifest::{config_hash, RunLog, RunManifest, StageTiming, MANIFEST_FILE};
pub use optimize::{run_optimize, BEST_STL_FILE, HISTORY_FILE, SUMMARY_FILE};
pub use pipeline::{EvalFailure, Evaluation, MeshStats, Pipeline};
