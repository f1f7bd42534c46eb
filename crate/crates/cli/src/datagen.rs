use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anvil_core::config::RunConfig;
use anvil_core::sampling::{generate, scale_to_space, Assignment};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::manifest::RunLog;
use crate::pipeline::{EvalFailure, Pipeline};
use crate::CliError;

pub const DATASET_FILE: &str = "dataset.csv";
pub const DATASET_META_FILE: &str = "dataset.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub sample: usize,
    pub params: Vec<f64>,
    pub mesh_attempts: usize,
    pub drag: Option<f64>,
    pub failure: Option<String>,
    pub wall_time_s: f64,
}

/// Result of evaluating one sample: `Ok(drag)` or a failure.
pub type SampleOutcome = Result<(f64, usize), EvalFailure>;

pub fn dataset_header(names: &[&str]) -> Vec<String> {
    let mut h = vec!["sample".to_string()];
    h.extend(names.iter().map(|n| format!("{n}_mm")));
    h.extend(["mesh_attempts", "drag_N", "failure", "wall_time_s"].map(String::from));
    h
}

/// Reads a dataset written by [`run_data_generation`].
pub fn read_dataset(path: &Path) -> Result<(Vec<String>, Vec<DatasetRow>), CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let header: Vec<String> = rd.headers().map_err(|e| CliError::io(path, e))?.iter().map(String::from).collect();
    let np = header.len().saturating_sub(5);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| CliError::Dataset(e.to_string()))?;
        let bad = |what: &str| CliError::Dataset(format!("row {:?}: bad {what}", rec.position().map(|p| p.line())));
        let num = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok());
        let sample = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("sample"))?;
        let params = (1..=np).map(num).collect::<Option<Vec<_>>>().ok_or_else(|| bad("parameter"))?;
        let mesh_attempts = rec.get(np + 1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("mesh_attempts"))?;
        let drag = rec.get(np + 2).filter(|s| !s.is_empty()).map(|s| s.parse().map_err(|_| bad("drag_N"))).transpose()?;
        let failure = rec.get(np + 3).filter(|s| !s.is_empty()).map(String::from);
        let wall_time_s = num(np + 4).ok_or_else(|| bad("wall_time_s"))?;
        rows.push(DatasetRow { sample, params, mesh_attempts, drag, failure, wall_time_s });
    }
    Ok((header, rows))
}

fn write_meta(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let sampling = cfg.sampling.as_ref().expect("validated");
    let mut columns = vec![json!({"name": "sample", "unit": "", "description": "0-based index into the sample plan"})];
    for p in &cfg.design.parameters {
        columns.push(json!({"name": format!("{}_mm", p.name), "unit": "mm", "min": p.min, "max": p.max}));
    }
    columns.push(json!({"name": "mesh_attempts", "unit": "", "description": "auto-mesh attempts used"}));
    columns.push(json!({"name": "drag_N", "unit": "N", "description": "drag force, empty when the sample failed"}));
    columns.push(json!({"name": "failure", "unit": "", "description": "failure code, empty on success"}));
    columns.push(json!({"name": "wall_time_s", "unit": "s", "description": "wall time of the evaluation"}));
    let meta = json!({
        "columns": columns,
        "seed_design": cfg.design.seed_design,
        "sampling": sampling,
        "rng_seed": cfg.rng_seed,
        "fluid": cfg.fluid,
    });
    let path = out.join(DATASET_META_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&meta).expect("json") + "\n").map_err(|e| CliError::io(&path, e))
}

fn fmt_row(sample: usize, a: &Assignment, outcome: &SampleOutcome, secs: f64) -> Vec<String> {
    let mut r = vec![sample.to_string()];
    r.extend(a.iter().map(|(_, v)| v.to_string()));
    match outcome {
        Ok((drag, attempts)) => r.extend([attempts.to_string(), drag.to_string(), String::new()]),
        Err(f) => r.extend([f.mesh_attempts.to_string(), String::new(), f.code.clone()]),
    }
    r.push(format!("{secs:.3}"));
    r
}

/// Data generation with the real pipeline.
pub fn run_data_generation(cfg: &RunConfig, out: &Path, log: &RunLog) -> Result<usize, CliError> {
    let pipeline = Pipeline::new(cfg)?;
    run_data_generation_with(cfg, out, log, |i, a| {
        let map: BTreeMap<String, f64> = a.iter().cloned().collect();
        let body = log.time("geometry", || pipeline.body(&map)).map_err(|e| EvalFailure {
            code: "geometry".into(),
            message: e.to_string(),
            mesh_attempts: 0,
        })?;
        let case = out.join("cases").join(format!("sample_{i:05}"));
        pipeline.evaluate(&body, &case, log).map(|e| (e.drag.drag_force, e.mesh.attempts.len()))
    })
}

/// Evaluates every plan sample not yet in `out/dataset.csv`, in batches of
/// `batch_size`. Rows are appended and flushed after each batch, in sample
/// order. Returns the number of samples evaluated by this call.
pub fn run_data_generation_with<F>(cfg: &RunConfig, out: &Path, log: &RunLog, eval: F) -> Result<usize, CliError>
where
    F: Fn(usize, &Assignment) -> SampleOutcome + Sync,
{
    let sampling = cfg.sampling.as_ref().ok_or(anvil_core::config::ConfigError::MissingSection {
        mode: "data_generation",
        section: "sampling",
    })?;
    let plan = log.time("sampling", || {
        generate(sampling.method, sampling.count, cfg.design.dimension(), cfg.rng_seed, sampling.lhs_iterations)
    })?;
    let samples = scale_to_space(&plan, &cfg.design)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_meta(cfg, out)?;
    log.output(DATASET_META_FILE);

    let header = dataset_header(&cfg.design.names());
    let path = out.join(DATASET_FILE);
    let mut done = BTreeSet::new();
    let fresh = !path.exists() || std::fs::metadata(&path).map(|m| m.len() == 0).unwrap_or(true);
    if !fresh {
        let (h, rows) = read_dataset(&path)?;
        if h != header {
            return Err(CliError::Dataset(format!("header {h:?} differs from expected {header:?}")));
        }
        for r in rows {
            if r.sample >= samples.len() {
                return Err(CliError::Dataset(format!("sample index {} beyond plan size {}", r.sample, samples.len())));
            }
            done.insert(r.sample);
        }
        info!("resuming: {} of {} samples already present", done.len(), samples.len());
    }
    let file: File = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| CliError::io(&path, e))?;
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        wr.write_record(&header).map_err(|e| CliError::io(&path, e))?;
        wr.flush().map_err(|e| CliError::io(&path, e))?;
    }
    log.output(DATASET_FILE);

    let todo: Vec<usize> = (0..samples.len()).filter(|i| !done.contains(i)).collect();
    let batch = sampling.batch_size.max(1);
    for chunk in todo.chunks(batch) {
        let rows: Vec<Vec<String>> = chunk
            .par_iter()
            .map(|&i| {
                let t = Instant::now();
                let outcome = eval(i, &samples[i]);
                if let Err(f) = &outcome {
                    warn!("sample {i} failed: {f}");
                    log.failure(&f.code);
                }
                fmt_row(i, &samples[i], &outcome, t.elapsed().as_secs_f64())
            })
            .collect();
        for r in &rows {
            wr.write_record(r).map_err(|e| CliError::io(&path, e))?;
        }
        wr.flush().map_err(|e| CliError::io(&path, e))?;
        wr.get_ref().sync_data().map_err(|e| CliError::io(&path, e))?;
        info!("wrote samples {}..={}", chunk[0], chunk[chunk.len() - 1]);
    }
    let mut file = wr.into_inner().map_err(|e| CliError::io(&path, e.error()))?;
    file.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(todo.len())
}
