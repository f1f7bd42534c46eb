use log::info;
use serde::{Deserialize, Serialize};

use crate::config::MeshSpec;
use crate::geometry::TriMesh;

use super::castellate::castellate;
use super::hex::{DomainBox, HexMesh};
use super::quality::{quality_check, MeshQualityReport};
use super::{FailureCode, MeshError, MeshFailure, MeshStage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshAttempt {
    /// 1-based.
    pub attempt: u32,
    pub base_cells: [usize; 3],
    pub failure: Option<MeshFailure>,
    /// Active cells on success.
    pub cells: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct AutoMesh {
    pub mesh: HexMesh,
    pub quality: MeshQualityReport,
    pub attempts: Vec<MeshAttempt>,
}

fn one_attempt(body: &TriMesh, spec: &MeshSpec, cells: [usize; 3]) -> Result<(HexMesh, MeshQualityReport), MeshFailure> {
    let domain = DomainBox::around(&body.bounding_box(), &spec.domain_scale, cells);
    let background = HexMesh::block_mesh(domain, cells);
    let mut mesh = castellate(&background, body, spec.surface_refinement_levels)?;
    let mut report = quality_check(&mesh, &spec.quality);
    if !report.flagged_for_removal.is_empty() {
        mesh.remove_cells(&report.flagged_for_removal);
        report = quality_check(&mesh, &spec.quality);
    }
    if !report.is_clean() {
        return Err(MeshFailure {
            stage: MeshStage::Quality,
            code: FailureCode::QualityViolations,
            count: report.violating_cells.len(),
            detail: format!("{} cells violate quality thresholds", report.violating_cells.len()),
        });
    }
    Ok((mesh, report))
}

/// Meshes `body`, doubling the base cell counts after each failure, for at
/// most `spec.max_retries` attempts.
pub fn auto_mesh(body: &TriMesh, spec: &MeshSpec) -> Result<AutoMesh, MeshError> {
    let mut cells = spec.base_cells;
    let mut attempts = Vec::new();
    for attempt in 1..=spec.max_retries {
        match one_attempt(body, spec, cells) {
            Ok((mesh, quality)) => {
                info!("mesh attempt {attempt}: {:?} base cells -> {} fluid cells", cells, mesh.cells.len());
                attempts.push(MeshAttempt { attempt, base_cells: cells, failure: None, cells: Some(mesh.cells.len()) });
                return Ok(AutoMesh { mesh, quality, attempts });
            }
            Err(f) if f.code == FailureCode::NonWatertightBody => {
                return Err(MeshError::NonWatertightInput { open_edges: body.topology().non_manifold_edges });
            }
            Err(f) => {
                info!("mesh attempt {attempt}: {:?} base cells failed: {}", cells, f.detail);
                attempts.push(MeshAttempt { attempt, base_cells: cells, failure: Some(f), cells: None });
                cells = cells.map(|n| n * 2);
            }
        }
    }
    Err(MeshError::AutoMeshExhausted { attempts })
}
