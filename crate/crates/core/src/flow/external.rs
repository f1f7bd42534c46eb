use std::fs::{self, File};
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::mesh::{write_vtk, HexMesh, Patch};

use super::conditions::{FlowConditions, TurbulenceIc};
use super::field::DragReport;
use super::FlowError;

pub const MESH_FILE: &str = "mesh.vtk";
pub const BOUNDARY_FILE: &str = "boundary_conditions.json";
pub const INITIAL_FILE: &str = "initial_conditions.json";
pub const CASE_FILE: &str = "case.json";
pub const RESULT_FILE: &str = "forces.csv";
pub const LOG_FILE: &str = "solver.log";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryKind {
    FixedVelocity { velocity: [f64; 3] },
    FixedPressure { gauge_pressure: f64 },
    Symmetry,
    NoSlip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub patch: Patch,
    pub faces: usize,
    #[serde(flatten)]
    pub condition: BoundaryKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCase {
    pub dir: PathBuf,
    pub records: Vec<PatchRecord>,
    pub argv: Vec<String>,
    pub result_file: PathBuf,
    pub conditions: FlowConditions,
    pub turbulence: TurbulenceIc,
    /// m^2
    pub reference_area: f64,
}

impl ExternalCase {
    pub fn record(&self, patch: Patch) -> Option<&PatchRecord> {
        self.records.iter().find(|r| r.patch == patch)
    }
}

fn io(path: &Path, e: std::io::Error) -> FlowError {
    FlowError::Io(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), FlowError> {
    let text = serde_json::to_string_pretty(value).expect("json values serialise");
    fs::write(path, text + "\n").map_err(|e| io(path, e))
}

/// Writes a case directory for an external RANS solver.
pub fn emit_external_case(
    mesh: &HexMesh,
    cond: &FlowConditions,
    ic: &TurbulenceIc,
    reference_area: f64,
    argv: &[String],
    dir: &Path,
) -> Result<ExternalCase, FlowError> {
    let counts = mesh.patch_counts();
    let mut records = Vec::new();
    for patch in Patch::ALL {
        let faces = counts.get(&patch).copied().unwrap_or(0);
        if faces == 0 {
            return Err(FlowError::MissingPatch(patch));
        }
        let condition = match patch {
            Patch::Inlet => BoundaryKind::FixedVelocity { velocity: [cond.inlet_speed, 0.0, 0.0] },
            Patch::Outlet => BoundaryKind::FixedPressure { gauge_pressure: 0.0 },
            Patch::Symmetry => BoundaryKind::Symmetry,
            Patch::Body => BoundaryKind::NoSlip,
        };
        records.push(PatchRecord { patch, faces, condition });
    }
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mesh_path = dir.join(MESH_FILE);
    fs::write(&mesh_path, write_vtk(mesh)).map_err(|e| io(&mesh_path, e))?;
    write_json(&dir.join(BOUNDARY_FILE), &json!({ "length_unit": "mm", "patches": records }))?;
    write_json(
        &dir.join(INITIAL_FILE),
        &json!({
            "velocity": [cond.inlet_speed, 0.0, 0.0],
            "gauge_pressure": 0.0,
            "k": ic.k,
            "omega": ic.omega,
            "c_mu": ic.c_mu,
            "length_scale": ic.length_scale,
            "density": cond.density,
            "kinematic_viscosity": cond.kinematic_viscosity,
            "turbulence_intensity": cond.turbulence_intensity,
        }),
    )?;
    write_json(
        &dir.join(CASE_FILE),
        &json!({
            "argv": argv,
            "mesh": MESH_FILE,
            "boundary_conditions": BOUNDARY_FILE,
            "initial_conditions": INITIAL_FILE,
            "result_file": RESULT_FILE,
            "log_file": LOG_FILE,
            "reference_area_m2": reference_area,
        }),
    )?;
    Ok(ExternalCase {
        dir: dir.to_path_buf(),
        records,
        argv: argv.to_vec(),
        result_file: dir.join(RESULT_FILE),
        conditions: *cond,
        turbulence: *ic,
        reference_area,
    })
}

/// Parses a forces file (`time,drag_N`); the last row wins.
pub fn parse_forces(text: &str) -> Result<(f64, usize), FlowError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rd.headers().map_err(|e| FlowError::ParseError { line: 1, message: e.to_string() })?.clone();
    let col = headers
        .iter()
        .position(|h| h == "drag_N")
        .ok_or_else(|| FlowError::ParseError { line: 1, message: "missing drag_N column".into() })?;
    let mut last = None;
    let mut rows = 0;
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| FlowError::ParseError { line, message: e.to_string() })?;
        let v: f64 = rec
            .get(col)
            .ok_or_else(|| FlowError::ParseError { line, message: "short row".into() })?
            .parse()
            .map_err(|_| FlowError::ParseError { line, message: "drag_N is not a number".into() })?;
        if !v.is_finite() {
            return Err(FlowError::ParseError { line, message: "non-finite drag".into() });
        }
        last = Some(v);
        rows += 1;
    }
    let drag = last.ok_or_else(|| FlowError::ParseError { line: 1, message: "no data rows".into() })?;
    Ok((drag, rows))
}

fn read_log(path: &Path) -> String {
    let mut s = String::new();
    if let Ok(mut f) = File::open(path) {
        let _ = f.read_to_string(&mut s);
    }
    s
}

/// Runs the configured command inside the case directory.
pub fn run_external(case: &ExternalCase, timeout: Duration) -> Result<DragReport, FlowError> {
    let (prog, args) = case.argv.split_first().ok_or_else(|| FlowError::CommandFailed {
        code: None,
        log: "empty command line".into(),
    })?;
    let log_path = case.dir.join(LOG_FILE);
    let log = File::create(&log_path).map_err(|e| io(&log_path, e))?;
    let err = log.try_clone().map_err(|e| io(&log_path, e))?;
    let mut child = Command::new(prog)
        .args(args)
        .current_dir(&case.dir)
        .stdin(Stdio::null())
        .stdout(log)
        .stderr(err)
        .spawn()
        .map_err(|e| FlowError::CommandFailed { code: None, log: format!("failed to start {prog}: {e}") })?;
    let start = Instant::now();
    let status = loop {
        if let Some(s) = child.try_wait().map_err(|e| io(&case.dir, e))? {
            break s;
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(FlowError::Timeout { seconds: timeout.as_secs_f64() });
        }
        std::thread::sleep(Duration::from_millis(10));
    };
    if !status.success() {
        return Err(FlowError::CommandFailed { code: status.code(), log: read_log(&log_path) });
    }
    let text = fs::read_to_string(&case.result_file).map_err(|_| FlowError::ResultMissing(case.result_file.clone()))?;
    let (drag, rows) = parse_forces(&text)?;
    Ok(DragReport::new([drag, 0.0, 0.0], case.reference_area, &case.conditions, rows))
}
