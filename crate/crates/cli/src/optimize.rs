use std::path::Path;

use anvil_core::bo::{bo_loop, BoError, BoHistory, BoOptions};
use anvil_core::config::{ConfigError, RunConfig};
use anvil_core::stl::{write_stl, StlFormat};
use log::{info, warn};

use crate::manifest::RunLog;
use crate::pipeline::Pipeline;
use crate::CliError;

pub const HISTORY_FILE: &str = "history.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const BEST_STL_FILE: &str = "best_design.stl";

fn write_history(history: &BoHistory, out: &Path, log: &RunLog) -> Result<(), CliError> {
    let path = out.join(HISTORY_FILE);
    std::fs::write(&path, history.to_csv()).map_err(|e| CliError::io(&path, e))?;
    log.output(HISTORY_FILE);
    let path = out.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&history.summary()).expect("json");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    log.output(SUMMARY_FILE);
    Ok(())
}

/// Sequential Bayesian optimization of the seed design's drag.
pub fn run_optimize(cfg: &RunConfig, out: &Path, log: &RunLog) -> Result<BoHistory, CliError> {
    let spec = cfg.optimizer.as_ref().ok_or(ConfigError::MissingSection { mode: "optimize", section: "optimizer" })?;
    let pipeline = Pipeline::new(cfg)?;
    if pipeline.table().is_none() {
        return Err(CliError::Input("optimization needs a parametric seed design".into()));
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let opts = BoOptions::from_spec(spec, cfg.rng_seed);
    let mut k = 0usize;
    let result = bo_loop(&cfg.design, &opts, |params| {
        k += 1;
        let body = log.time("geometry", || pipeline.body_from_values(params)).map_err(|e| {
            log.failure("geometry");
            format!("geometry: {e}")
        })?;
        let case = out.join("cases").join(format!("iter_{k:03}"));
        match pipeline.evaluate(&body, &case, log) {
            Ok(e) => {
                info!("iteration {k}: drag {:.6e} N", e.drag.drag_force);
                Ok(e.drag.drag_force)
            }
            Err(f) => {
                warn!("iteration {k} failed: {f}");
                log.failure(&f.code);
                Err(f.to_string())
            }
        }
    });
    let history = match result {
        Ok(h) => h,
        Err(BoError::AllEvaluationsFailed(h)) => {
            write_history(&h, out, log)?;
            return Err(BoError::AllEvaluationsFailed(h).into());
        }
        Err(e) => return Err(e.into()),
    };
    write_history(&history, out, log)?;
    let best = history.incumbent().expect("a successful record exists");
    info!("best drag {:.6e} N at iteration {}", best.drag.unwrap_or(f64::NAN), best.iteration);
    let body = pipeline.body_from_values(&best.params)?;
    let path = out.join(BEST_STL_FILE);
    std::fs::write(&path, write_stl(&body, StlFormat::Binary)).map_err(|e| CliError::io(&path, e))?;
    log.output(BEST_STL_FILE);
    Ok(history)
}
