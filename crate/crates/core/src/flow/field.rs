use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::TriMesh;

use super::conditions::FlowConditions;
use super::lattice::{body_links, link_force, stream_sources, Boundaries, UnitScale, VoxelGrid};
use super::FlowError;

/// Converged lattice state with physical-unit views.
#[derive(Debug, Clone)]
pub struct FlowField {
    pub grid: VoxelGrid,
    pub boundaries: Boundaries,
    pub scale: UnitScale,
    /// m/s per voxel, zero in solid voxels.
    pub velocity: Vec<[f64; 3]>,
    /// Gauge pressure (Pa) per voxel.
    pub pressure: Vec<f64>,
    /// Post-collision populations, lattice units.
    pub populations: Vec<f64>,
    /// Relative change of the monitored quantity per window.
    pub residuals: Vec<f64>,
    /// Population mass per step: in/out through the inlet, in/out through the outlet.
    pub open_flux: [f64; 4],
    pub steps: usize,
}

impl FlowField {
    /// |net boundary flux| / inlet flux.
    pub fn mass_flux_defect(&self) -> f64 {
        let [ii, io, oi, oo] = self.open_flux;
        let inlet = ii - io;
        ((ii - io) + (oi - oo)).abs() / inlet.abs().max(f64::MIN_POSITIVE)
    }

    /// Mean gauge pressure over the last x layer.
    pub fn outlet_pressure(&self) -> f64 {
        let [nx, ny, nz] = self.grid.dims;
        let mut sum = 0.0;
        let mut n = 0usize;
        for z in 0..nz {
            for y in 0..ny {
                let i = self.grid.index(nx - 1, y, z);
                if !self.grid.solid[i] {
                    sum += self.pressure[i];
                    n += 1;
                }
            }
        }
        sum / n.max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragReport {
    /// N along +x.
    pub drag_force: f64,
    /// Full force vector on the body, N.
    pub force: [f64; 3],
    /// m^2
    pub reference_area: f64,
    pub drag_coefficient: f64,
    pub iterations: usize,
}

impl DragReport {
    pub fn new(force: [f64; 3], reference_area: f64, cond: &FlowConditions, iterations: usize) -> Self {
        let q = cond.dynamic_pressure() * reference_area;
        DragReport {
            drag_force: force[0],
            force,
            reference_area,
            drag_coefficient: if q > 0.0 { force[0] / q } else { 0.0 },
            iterations,
        }
    }
}

/// Momentum-exchange force on the solid voxels, N.
pub fn body_force(field: &FlowField) -> [f64; 3] {
    let src = stream_sources(&field.grid, &field.boundaries);
    let links = body_links(&field.grid, &src);
    link_force(&field.populations, &links).map(|f| f * field.scale.force())
}

pub fn drag_from_field(field: &FlowField, cond: &FlowConditions, reference_area: f64) -> DragReport {
    DragReport::new(body_force(field), reference_area, cond, field.steps)
}

/// Area (m^2) of the body's shadow on the y-z plane, rasterised on a
/// `res` x `res` grid over its bounding box. Input lengths in mm.
pub fn frontal_area(body: &TriMesh, res: usize) -> f64 {
    if body.triangles.is_empty() {
        return 0.0;
    }
    let bb = body.bounding_box();
    let (y0, z0) = (bb.min[1], bb.min[2]);
    let (hy, hz) = ((bb.max[1] - y0) / res as f64, (bb.max[2] - z0) / res as f64);
    if hy <= 0.0 || hz <= 0.0 {
        return 0.0;
    }
    let mut covered = vec![false; res * res];
    for t in 0..body.triangles.len() {
        let tri = body.triangle(t);
        let p = tri.map(|v| [v[1], v[2]]);
        let area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        if area == 0.0 {
            continue;
        }
        let lo = |a: usize, o: f64, h: f64| (((p.iter().fold(f64::INFINITY, |m, v| m.min(v[a])) - o) / h - 0.5).ceil().max(0.0)) as usize;
        let hi = |a: usize, o: f64, h: f64| ((((p.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v[a])) - o) / h - 0.5).floor()) as isize).min(res as isize - 1);
        let (j0, j1) = (lo(0, y0, hy), hi(0, y0, hy));
        let (k0, k1) = (lo(1, z0, hz), hi(1, z0, hz));
        for k in k0 as isize..=k1 {
            for j in j0 as isize..=j1 {
                let s = [y0 + (j as f64 + 0.5) * hy, z0 + (k as f64 + 0.5) * hz];
                let e = |a: [f64; 2], b: [f64; 2]| ((b[0] - a[0]) * (s[1] - a[1]) - (b[1] - a[1]) * (s[0] - a[0])) * area.signum();
                if e(p[0], p[1]) >= 0.0 && e(p[1], p[2]) >= 0.0 && e(p[2], p[0]) >= 0.0 {
                    covered[k as usize * res + j as usize] = true;
                }
            }
        }
    }
    let n = covered.iter().filter(|&&c| c).count();
    n as f64 * hy * hz * 1e-6
}

/// Legacy VTK structured points with point data `U` (m/s) and `p` (Pa).
pub fn field_to_vtk(field: &FlowField) -> String {
    let g = &field.grid;
    let mut s = String::new();
    let _ = write!(
        s,
        "# vtk DataFile Version 3.0\nanvil flow field (SI units)\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS {} {} {}\nORIGIN {} {} {}\nSPACING {} {} {}\nPOINT_DATA {}\nVECTORS U double\n",
        g.dims[0], g.dims[1], g.dims[2], g.origin[0], g.origin[1], g.origin[2], g.dx, g.dx, g.dx, g.len()
    );
    for v in &field.velocity {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    s.push_str("SCALARS p double 1\nLOOKUP_TABLE default\n");
    for p in &field.pressure {
        let _ = writeln!(s, "{p}");
    }
    s
}

pub fn export_field(field: &FlowField, path: &Path) -> Result<(), FlowError> {
    std::fs::write(path, field_to_vtk(field)).map_err(|e| FlowError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportedField {
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub velocity: Vec<[f64; 3]>,
    pub pressure: Vec<f64>,
}

/// Reads files written by [`export_field`].
pub fn import_field(text: &str) -> Result<ImportedField, FlowError> {
    let bad = |line: usize, m: &str| FlowError::ParseError { line, message: m.to_string() };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut dims = None;
    let mut origin = None;
    let mut spacing = None;
    let mut velocity = Vec::new();
    let mut pressure = Vec::new();
    let nums = |line: usize, l: &str, skip: usize| -> Result<Vec<f64>, FlowError> {
        l.split_whitespace().skip(skip).map(|t| t.parse::<f64>().map_err(|_| bad(line, "bad number"))).collect()
    };
    while let Some((ln, l)) = lines.next() {
        if let Some(rest) = l.strip_prefix("DIMENSIONS") {
            let v = nums(ln, rest, 0)?;
            if v.len() != 3 {
                return Err(bad(ln, "DIMENSIONS needs 3 values"));
            }
            dims = Some([v[0] as usize, v[1] as usize, v[2] as usize]);
        } else if let Some(rest) = l.strip_prefix("ORIGIN") {
            let v = nums(ln, rest, 0)?;
            if v.len() != 3 {
                return Err(bad(ln, "expected 3 values"));
            }
            origin = Some([v[0], v[1], v[2]]);
        } else if let Some(rest) = l.strip_prefix("SPACING") {
            let v = nums(ln, rest, 0)?;
            if v.len() != 3 {
                return Err(bad(ln, "expected 3 values"));
            }
            spacing = Some([v[0], v[1], v[2]]);
        } else if l.starts_with("VECTORS U") {
            let n: usize = dims.ok_or_else(|| bad(ln, "VECTORS before DIMENSIONS"))?.iter().product();
            for _ in 0..n {
                let (ln, l) = lines.next().ok_or_else(|| bad(ln, "truncated U"))?;
                let v = nums(ln, l, 0)?;
                if v.len() != 3 {
                    return Err(bad(ln, "U needs 3 components"));
                }
                velocity.push([v[0], v[1], v[2]]);
            }
        } else if l.starts_with("SCALARS p") {
            let n: usize = dims.ok_or_else(|| bad(ln, "SCALARS before DIMENSIONS"))?.iter().product();
            lines.next();
            for _ in 0..n {
                let (ln, l) = lines.next().ok_or_else(|| bad(ln, "truncated p"))?;
                pressure.push(l.parse().map_err(|_| bad(ln, "bad number"))?);
            }
        }
    }
    Ok(ImportedField {
        dims: dims.ok_or_else(|| bad(0, "missing DIMENSIONS"))?,
        origin: origin.ok_or_else(|| bad(0, "missing ORIGIN"))?,
        spacing: spacing.ok_or_else(|| bad(0, "missing SPACING"))?,
        velocity,
        pressure,
    })
}
