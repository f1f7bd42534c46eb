use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use anvil_core::config::RunConfig;
use chrono::{DateTime, SecondsFormat, Utc};
use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub calls: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub mode: String,
    /// SHA-256 of the config file bytes.
    pub config_sha256: String,
    pub started_at: String,
    pub finished_at: String,
    pub stages: BTreeMap<String, StageTiming>,
    pub failures: BTreeMap<String, usize>,
    pub outputs: Vec<String>,
    pub success: bool,
    pub error: Option<String>,
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects timings and failure counts from (possibly parallel) stages.
pub struct RunLog {
    mode: String,
    config_sha256: String,
    started: DateTime<Utc>,
    stages: Mutex<BTreeMap<String, StageTiming>>,
    failures: Mutex<BTreeMap<String, usize>>,
    outputs: Mutex<Vec<String>>,
}

impl RunLog {
    pub fn new(mode: &str, config_sha256: String) -> Self {
        RunLog {
            mode: mode.to_string(),
            config_sha256,
            started: Utc::now(),
            stages: Mutex::new(BTreeMap::new()),
            failures: Mutex::new(BTreeMap::new()),
            outputs: Mutex::new(Vec::new()),
        }
    }

    /// For configs built in memory: hashes their canonical JSON.
    pub fn for_config(cfg: &RunConfig) -> Self {
        RunLog::new(cfg.mode.as_str(), config_hash(cfg.to_json().as_bytes()))
    }

    pub fn time<T>(&self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        let s = t.elapsed().as_secs_f64();
        info!("stage {stage}: {s:.3} s");
        let mut m = self.stages.lock().expect("stage log");
        let e = m.entry(stage.to_string()).or_default();
        e.calls += 1;
        e.seconds += s;
        out
    }

    pub fn failure(&self, code: &str) {
        *self.failures.lock().expect("failure log").entry(code.to_string()).or_insert(0) += 1;
    }

    pub fn output(&self, name: &str) {
        self.outputs.lock().expect("output log").push(name.to_string());
    }

    /// Writes `manifest.json` into `dir`; call once, after everything else.
    pub fn finish(self, dir: &Path, result: &Result<(), CliError>) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            tool: "anvil".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            mode: self.mode,
            config_sha256: self.config_sha256,
            started_at: self.started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            stages: self.stages.into_inner().expect("stage log"),
            failures: self.failures.into_inner().expect("failure log"),
            outputs: self.outputs.into_inner().expect("output log"),
            success: result.is_ok(),
            error: result.as_ref().err().map(|e| e.to_string()),
        };
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
