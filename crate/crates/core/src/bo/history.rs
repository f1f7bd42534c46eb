use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::gp::GpHyper;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initial,
    Bo,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Initial => "initial",
            Phase::Bo => "bo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoRecord {
    /// 1-based evaluation index.
    pub iteration: usize,
    pub phase: Phase,
    /// Unit-cube coordinates.
    pub x: Vec<f64>,
    /// Physical parameter values (mm).
    pub params: Vec<f64>,
    /// Observed drag (N), absent when the evaluation failed.
    pub drag: Option<f64>,
    pub failure: Option<String>,
    /// Lowest drag among records up to and including this one.
    pub best_so_far: Option<f64>,
    pub acquisition: Option<f64>,
    pub hyper: Option<GpHyper>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoHistory {
    pub names: Vec<String>,
    pub records: Vec<BoRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl BoHistory {
    pub fn new(names: Vec<String>) -> Self {
        BoHistory { names, records: Vec::new() }
    }

    pub(crate) fn push(
        &mut self,
        phase: Phase,
        x: Vec<f64>,
        params: Vec<f64>,
        outcome: Result<f64, String>,
        acquisition: Option<f64>,
        hyper: Option<GpHyper>,
    ) {
        let prev = self.records.last().and_then(|r| r.best_so_far);
        let (drag, failure) = match outcome {
            Ok(y) => (Some(y), None),
            Err(e) => (None, Some(e)),
        };
        let best_so_far = match (prev, drag) {
            (Some(b), Some(y)) => Some(b.min(y)),
            (b, y) => b.or(y),
        };
        self.records.push(BoRecord {
            iteration: self.records.len() + 1,
            phase,
            x,
            params,
            drag,
            failure,
            best_so_far,
            acquisition,
            hyper,
        });
    }

    /// Unit-cube rows and observations of the successful evaluations.
    pub fn successes(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.records.iter().filter_map(|r| r.drag.map(|y| (r.x.clone(), y))).unzip()
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.drag.is_none()).count()
    }

    /// Lowest-drag record; the earliest wins ties.
    pub fn incumbent(&self) -> Option<&BoRecord> {
        self.records.iter().filter(|r| r.drag.is_some()).fold(None, |best: Option<&BoRecord>, r| match best {
            Some(b) if b.drag <= r.drag => Some(b),
            _ => Some(r),
        })
    }

    /// One row per evaluation: iteration, phase, parameters, drag, best, acquisition, failure.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["iteration".to_string(), "phase".to_string()];
        header.extend(self.names.iter().cloned());
        header.extend(["drag_N", "best_N", "acquisition", "failure"].map(String::from));
        w.write_record(&header).expect("in-memory write");
        for r in &self.records {
            let mut row = vec![r.iteration.to_string(), r.phase.as_str().to_string()];
            row.extend(r.params.iter().map(f64::to_string));
            row.push(opt(r.drag));
            row.push(opt(r.best_so_far));
            row.push(opt(r.acquisition));
            row.push(r.failure.clone().unwrap_or_default());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Incumbent and final surrogate hyperparameters.
    pub fn summary(&self) -> Value {
        let incumbent = self.incumbent().map(|r| {
            json!({
                "iteration": r.iteration,
                "params": self.names.iter().zip(&r.params).map(|(n, v)| (n.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
                "unit": r.x,
                "drag_N": r.drag,
            })
        });
        let hyper = self.records.iter().rev().find_map(|r| r.hyper.clone());
        json!({
            "evaluations": self.records.len(),
            "initial": self.records.iter().filter(|r| r.phase == Phase::Initial).count(),
            "failures": self.failures(),
            "incumbent": incumbent,
            "hyperparameters": hyper,
        })
    }
}
