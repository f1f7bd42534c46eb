use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::QualityThresholds;

use super::hex::{HexMesh, Patch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshQualityReport {
    pub min_aspect_ratio: f64,
    pub max_aspect_ratio: f64,
    /// Degrees.
    pub max_non_orthogonality: f64,
    pub max_skewness: f64,
    pub aspect_violations: usize,
    pub non_orthogonality_violations: usize,
    pub skewness_violations: usize,
    /// Active cells breaking at least one threshold.
    pub violating_cells: Vec<usize>,
    /// Violating cells that touch the body patch.
    pub flagged_for_removal: Vec<usize>,
}

impl MeshQualityReport {
    pub fn is_clean(&self) -> bool {
        self.violating_cells.is_empty()
    }
}

/// Aspect ratio per cell, and non-orthogonality and skewness per interior face.
pub fn quality_check(mesh: &HexMesh, limits: &QualityThresholds) -> MeshQualityReport {
    let mut bad = BTreeSet::new();
    let (mut amin, mut amax) = (f64::INFINITY, 0.0f64);
    let mut aspect_violations = 0;
    for (i, c) in mesh.cells.iter().enumerate() {
        let s = c.size();
        let ar = s.iter().fold(0.0f64, |a, &b| a.max(b)) / s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        amin = amin.min(ar);
        amax = amax.max(ar);
        if ar > limits.max_aspect_ratio {
            aspect_violations += 1;
            bad.insert(i);
        }
    }
    let (mut nmax, mut smax) = (0.0f64, 0.0f64);
    let (mut nv, mut sv) = (0, 0);
    let mut body_cells = BTreeSet::new();
    for f in mesh.faces() {
        if f.patch == Some(Patch::Body) {
            body_cells.insert(f.owner);
        }
        let Some(n) = f.neighbour else { continue };
        let co = mesh.cells[f.owner].centroid();
        let cn = mesh.cells[n].centroid();
        let d = [cn[0] - co[0], cn[1] - co[1], cn[2] - co[2]];
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let along = d[f.axis].abs();
        let angle = (along / len).clamp(-1.0, 1.0).acos().to_degrees();
        // Where the centroid-to-centroid line crosses the face plane.
        let t = (f.center[f.axis] - co[f.axis]) / d[f.axis];
        let hit = [co[0] + t * d[0], co[1] + t * d[1], co[2] + t * d[2]];
        let off = ((hit[0] - f.center[0]).powi(2) + (hit[1] - f.center[1]).powi(2) + (hit[2] - f.center[2]).powi(2)).sqrt();
        let skew = off / len;
        nmax = nmax.max(angle);
        smax = smax.max(skew);
        if angle > limits.max_non_orthogonality {
            nv += 1;
            bad.insert(f.owner);
            bad.insert(n);
        }
        if skew > limits.max_skewness {
            sv += 1;
            bad.insert(f.owner);
            bad.insert(n);
        }
    }
    let flagged = bad.iter().copied().filter(|c| body_cells.contains(c)).collect();
    MeshQualityReport {
        min_aspect_ratio: if amin.is_finite() { amin } else { 0.0 },
        max_aspect_ratio: amax,
        max_non_orthogonality: nmax,
        max_skewness: smax,
        aspect_violations,
        non_orthogonality_violations: nv,
        skewness_violations: sv,
        violating_cells: bad.into_iter().collect(),
        flagged_for_removal: flagged,
    }
}
