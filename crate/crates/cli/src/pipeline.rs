use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use anvil_core::config::{validate_against_seed, RunConfig, SeedDesign, SolverBackend};
use anvil_core::flow::{
    compute_turbulence_ic, emit_external_case, frontal_area, internal_drag, run_external, DragReport, FlowConditions,
    FlowError, FlowField, LbmOptions,
};
use anvil_core::geometry::{
    apply_parameters, instantiate_hull, instantiate_winged, GeometryError, HullParams, ParameterTable, TriMesh,
    WingedBodyParams,
};
use anvil_core::mesh::{auto_mesh, AutoMesh, HexMesh, MeshAttempt, MeshError, MeshQualityReport};
use serde::Serialize;

use crate::manifest::RunLog;
use crate::CliError;

/// Frontal-area raster resolution per axis.
const AREA_RASTER: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshStats {
    pub attempts: Vec<MeshAttempt>,
    pub cells: usize,
    pub removed_cells: usize,
    pub max_level: u8,
    pub quality: MeshQualityReport,
}

#[derive(Debug)]
pub struct Evaluation {
    pub drag: DragReport,
    pub reynolds: f64,
    /// Body length along the flow, m.
    pub body_length: f64,
    pub mesh: MeshStats,
    pub hex: HexMesh,
    /// Present for the internal backend.
    pub field: Option<FlowField>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalFailure {
    /// Stable short code, used as the `failure` column.
    pub code: String,
    pub message: String,
    pub mesh_attempts: usize,
}

impl EvalFailure {
    fn new(code: &str, message: impl ToString, mesh_attempts: usize) -> Self {
        EvalFailure { code: code.into(), message: message.to_string(), mesh_attempts }
    }
}

impl std::fmt::Display for EvalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

fn flow_code(e: &FlowError) -> &'static str {
    match e {
        FlowError::InvalidConditions(_) => "invalid_conditions",
        FlowError::StabilityBound { .. } => "solver_unstable",
        FlowError::Diverged { .. } => "diverged",
        FlowError::NotConverged { .. } => "not_converged",
        FlowError::MissingPatch(_) => "missing_patch",
        FlowError::CommandFailed { .. } => "solver_failed",
        FlowError::ResultMissing(_) => "result_missing",
        FlowError::ParseError { .. } => "result_unparseable",
        FlowError::Timeout { .. } => "solver_timeout",
        FlowError::Io(_) => "io",
    }
}

/// Geometry, meshing and drag evaluation for one run configuration.
pub struct Pipeline {
    pub config: RunConfig,
    pub conditions: FlowConditions,
    table: Option<ParameterTable>,
}

impl Pipeline {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let conditions = FlowConditions::from_fluid(&config.fluid)?;
        let table = config.design.seed_design.table();
        if let Some(t) = &table {
            validate_against_seed(config, t)?;
        }
        Ok(Pipeline { config: config.clone(), conditions, table })
    }

    pub fn table(&self) -> Option<&ParameterTable> {
        self.table.as_ref()
    }

    /// Instantiates the seed design with `assignment` over the table defaults.
    pub fn body(&self, assignment: &BTreeMap<String, f64>) -> Result<TriMesh, GeometryError> {
        let table = self.table.as_ref().ok_or_else(|| GeometryError::UnknownParameter("<external_stl>".into()))?;
        let t = apply_parameters(table, assignment)?;
        let segments = self.config.design.segments;
        match self.config.design.seed_design {
            SeedDesign::RevolvedHull => instantiate_hull(&HullParams::from_table(&t)?, segments),
            SeedDesign::WingedBody => instantiate_winged(&WingedBodyParams::from_table(&t)?, segments),
            SeedDesign::ExternalStl => unreachable!("external designs have no table"),
        }
    }

    pub fn body_from_values(&self, values: &[f64]) -> Result<TriMesh, GeometryError> {
        let names = self.config.design.names();
        self.body(&names.iter().map(|n| n.to_string()).zip(values.iter().copied()).collect())
    }

    pub fn mesh(&self, body: &TriMesh, log: &RunLog) -> Result<AutoMesh, MeshError> {
        log.time("mesh", || auto_mesh(body, &self.config.mesh))
    }

    /// Drag on `body` over an already generated mesh. External cases go to `case_dir`.
    pub fn solve(&self, body: &TriMesh, auto: AutoMesh, case_dir: &Path, log: &RunLog) -> Result<Evaluation, FlowError> {
        let stats = MeshStats {
            attempts: auto.attempts,
            cells: auto.mesh.cells.len(),
            removed_cells: auto.mesh.removed.len(),
            max_level: auto.mesh.max_level(),
            quality: auto.quality,
        };
        let bb = body.bounding_box();
        let body_length = (bb.max[0] - bb.min[0]) * 1e-3;
        let reynolds = self.conditions.reynolds(body_length);
        let cond = &self.conditions;
        let (drag, field) = match &self.config.solver_backend {
            SolverBackend::Internal { .. } => {
                let opts = LbmOptions::from_backend(&self.config.solver_backend).expect("internal backend");
                let (d, f) = log.time("solve", || internal_drag(&auto.mesh, body, cond, &opts))?;
                (d, Some(f))
            }
            SolverBackend::ExternalCommand { argv, timeout_s, length_scale_fraction, c_mu } => {
                let ic = compute_turbulence_ic(cond, length_scale_fraction * body_length, *c_mu);
                let area = frontal_area(body, AREA_RASTER);
                let case =
                    log.time("case_setup", || emit_external_case(&auto.mesh, cond, &ic, area, argv, case_dir))?;
                let d = log.time("solve", || run_external(&case, Duration::from_secs_f64(*timeout_s)))?;
                (d, None)
            }
        };
        Ok(Evaluation { drag, reynolds, body_length, mesh: stats, hex: auto.mesh, field })
    }

    /// Mesh plus solve, with failures reduced to a code.
    pub fn evaluate(&self, body: &TriMesh, case_dir: &Path, log: &RunLog) -> Result<Evaluation, EvalFailure> {
        let auto = self.mesh(body, log).map_err(|e| match e {
            MeshError::NonWatertightInput { .. } => EvalFailure::new("non_watertight", e, 0),
            MeshError::AutoMeshExhausted { ref attempts } => EvalFailure::new("mesh_exhausted", &e, attempts.len()),
        })?;
        let attempts = auto.attempts.len();
        self.solve(body, auto, case_dir, log).map_err(|e| EvalFailure::new(flow_code(&e), e, attempts))
    }
}
