//! Background block mesh, castellation against the body, quality checks and
//! automatic resolution retries.

mod auto;
mod castellate;
mod hex;
mod inside;
mod quality;
mod sat;
mod vtk;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use auto::{auto_mesh, AutoMesh, MeshAttempt};
pub use castellate::{castellate, fluid_regions, MIN_INSIDE_BASE_CELLS};
pub use hex::{Cell, DomainBox, Face, HexMesh, Patch};
pub use inside::InsideClassifier;
pub use quality::{quality_check, MeshQualityReport};
pub use sat::triangle_box_overlap;
pub use vtk::write_vtk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshStage {
    Castellation,
    Refinement,
    Quality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCode {
    UnderResolved,
    AmbiguousFluidRegion,
    NonWatertightBody,
    BodyOutsideDomain,
    QualityViolations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[error("{stage:?} failed ({code:?}): {detail}")]
pub struct MeshFailure {
    pub stage: MeshStage,
    pub code: FailureCode,
    pub count: usize,
    pub detail: String,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("surface is not watertight ({open_edges} edges not shared by exactly two triangles)")]
    NonWatertightInput { open_edges: usize },
    #[error("meshing failed after {} attempts", attempts.len())]
    AutoMeshExhausted { attempts: Vec<MeshAttempt> },
}
