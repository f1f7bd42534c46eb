use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anvil_core::config::{RunConfig, SolverBackend};
use anvil_core::flow::{export_field, DragReport};
use anvil_core::geometry::TriMesh;
use anvil_core::mesh::{write_vtk, MeshError};
use anvil_core::stl::read_stl;
use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use crate::manifest::RunLog;
use crate::pipeline::{MeshStats, Pipeline};
use crate::CliError;

pub const REPORT_FILE: &str = "report.json";
pub const FIELD_FILE: &str = "field.vtk";
pub const MESH_FILE: &str = "mesh.vtk";
pub const CASE_DIR: &str = "case";

#[derive(Debug, Clone, PartialEq)]
pub enum CfdInput {
    Stl(PathBuf),
    /// Overrides of the seed table defaults.
    Parameters(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfdReport {
    #[serde(flatten)]
    pub drag: DragReport,
    pub reynolds: f64,
    pub body_length_m: f64,
    pub backend: &'static str,
    pub mesh: MeshStats,
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("json");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn load_body(pipeline: &Pipeline, input: &CfdInput, log: &RunLog) -> Result<TriMesh, CliError> {
    match input {
        CfdInput::Stl(path) => {
            if !path.is_file() {
                return Err(CliError::io(path, "file not found"));
            }
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            let read = log.time("geometry", || read_stl(&bytes))?;
            let d = &read.diagnostics;
            info!(
                "read {} triangles ({:?}), watertight {}, bbox {:?}..{:?} mm",
                d.triangle_count, d.format, d.watertight, d.bounding_box.min, d.bounding_box.max
            );
            Ok(read.mesh)
        }
        CfdInput::Parameters(map) => {
            if pipeline.table().is_none() {
                return Err(CliError::Input("external_stl designs need --stl".into()));
            }
            Ok(log.time("geometry", || pipeline.body(map))?)
        }
    }
}

/// One design through mesh and solve. Writes `report.json`, `mesh.vtk` and
/// either `field.vtk` (internal backend) or a `case/` directory.
pub fn run_cfd(cfg: &RunConfig, input: &CfdInput, out: &Path, log: &RunLog) -> Result<CfdReport, CliError> {
    let pipeline = Pipeline::new(cfg)?;
    let body = load_body(&pipeline, input, log)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let auto = match pipeline.mesh(&body, log) {
        Ok(a) => a,
        Err(e) => {
            let attempts = match &e {
                MeshError::AutoMeshExhausted { attempts } => attempts.clone(),
                MeshError::NonWatertightInput { .. } => Vec::new(),
            };
            warn!("meshing failed: {e}");
            log.failure("mesh");
            write_json(&out.join(REPORT_FILE), &json!({ "error": e.to_string(), "mesh_attempts": attempts }))?;
            log.output(REPORT_FILE);
            return Err(e.into());
        }
    };
    let mesh_path = out.join(MESH_FILE);
    log.time("export", || std::fs::write(&mesh_path, write_vtk(&auto.mesh))).map_err(|e| CliError::io(&mesh_path, e))?;
    log.output(MESH_FILE);
    let attempts = auto.attempts.clone();
    let eval = match pipeline.solve(&body, auto, &out.join(CASE_DIR), log) {
        Ok(e) => e,
        Err(e) => {
            warn!("solve failed: {e}");
            log.failure("solve");
            write_json(&out.join(REPORT_FILE), &json!({ "error": e.to_string(), "mesh_attempts": attempts }))?;
            log.output(REPORT_FILE);
            return Err(e.into());
        }
    };
    if let Some(field) = &eval.field {
        log.time("export", || export_field(field, &out.join(FIELD_FILE)))?;
        log.output(FIELD_FILE);
    } else {
        log.output(CASE_DIR);
    }
    let backend = match cfg.solver_backend {
        SolverBackend::Internal { .. } => "internal",
        SolverBackend::ExternalCommand { .. } => "external_command",
    };
    let report = CfdReport {
        drag: eval.drag,
        reynolds: eval.reynolds,
        body_length_m: eval.body_length,
        backend,
        mesh: eval.mesh,
    };
    info!("drag {:.6e} N, Cd {:.4}, Re {:.4e}", report.drag.drag_force, report.drag.drag_coefficient, report.reynolds);
    write_json(&out.join(REPORT_FILE), &report)?;
    log.output(REPORT_FILE);
    Ok(report)
}
