use std::path::{Path, PathBuf};

use anvil_core::bo::BoError;
use anvil_core::config::{ConfigError, Mode};
use anvil_core::flow::FlowError;
use anvil_core::geometry::GeometryError;
use anvil_core::mesh::MeshError;
use anvil_core::sampling::SamplingError;
use anvil_core::stl::StlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("command `{cli}` does not match config mode `{config}`")]
    ModeMismatch { cli: &'static str, config: &'static str },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Input(String),
    #[error("existing dataset is incompatible: {0}")]
    Dataset(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Bo(#[from] BoError),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    /// 2 when meshing or every optimisation evaluation failed, else 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mesh(MeshError::AutoMeshExhausted { .. }) | CliError::Bo(BoError::AllEvaluationsFailed(_)) => 2,
            _ => 1,
        }
    }
}

pub(crate) fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::DataGeneration => "data-gen",
        Mode::Cfd => "cfd",
        Mode::Optimize => "optimize",
    }
}
