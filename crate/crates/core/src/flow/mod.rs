//! Drag evaluation: an internal D3Q19 lattice-Boltzmann solver for
//! laminar verification cases and a case-directory adapter for external
//! RANS solvers.

mod conditions;
mod external;
mod field;
mod lattice;

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::TriMesh;
use crate::mesh::{HexMesh, Patch};

pub use conditions::{compute_turbulence_ic, FlowConditions, TurbulenceIc, DEFAULT_C_MU};
pub use external::{
    emit_external_case, parse_forces, run_external, BoundaryKind, ExternalCase, PatchRecord, BOUNDARY_FILE, CASE_FILE,
    INITIAL_FILE, LOG_FILE, MESH_FILE, RESULT_FILE,
};
pub use field::{
    body_force, drag_from_field, export_field, field_to_vtk, frontal_area, import_field, DragReport, FlowField,
    ImportedField,
};
pub use lattice::{
    equilibrium, lbm_solve, Boundaries, Lattice, LbmOptions, StreamBoundary, UnitScale, VoxelGrid, C, CS2,
    MAX_LATTICE_VELOCITY, OPP, Q, TAU_RANGE, W,
};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid flow conditions: {0}")]
    InvalidConditions(String),
    #[error("no stable lattice scaling: tau would be {tau:.4} (cell Reynolds number {reynolds_per_cell:.3e})")]
    StabilityBound { tau: f64, reynolds_per_cell: f64 },
    #[error("lattice solver diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },
    #[error("not converged after {steps} steps (residual {residual:.3e})")]
    NotConverged { steps: usize, residual: f64 },
    #[error("mesh has no {} patch", .0.as_str())]
    MissingPatch(Patch),
    #[error("external solver failed (exit code {code:?})")]
    CommandFailed { code: Option<i32>, log: String },
    #[error("external solver wrote no result file {0}")]
    ResultMissing(PathBuf),
    #[error("cannot parse result line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("external solver exceeded {seconds} s")]
    Timeout { seconds: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Lattice solve on the base voxels of `mesh` and drag on `body`.
pub fn internal_drag(
    mesh: &HexMesh,
    body: &TriMesh,
    cond: &FlowConditions,
    opts: &LbmOptions,
) -> Result<(DragReport, FlowField), FlowError> {
    let grid = VoxelGrid::from_mesh(mesh);
    let field = lbm_solve(&grid, cond, Boundaries::external_flow(), opts)?;
    let report = drag_from_field(&field, cond, frontal_area(body, 256));
    Ok((report, field))
}
