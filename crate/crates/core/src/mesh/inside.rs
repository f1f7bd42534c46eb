use crate::geometry::vec3::Vec3;
use crate::geometry::{Aabb, TriMesh};

use super::MeshError;

const MAX_JITTER_TRIES: usize = 32;

/// Point-in-solid queries against a closed triangle mesh by +x ray parity.
///
/// Triangles are bucketed on a y-z grid so a query only visits triangles
/// whose projection can contain the ray. Rays that graze an edge or vertex
/// are retried from a slightly displaced origin.
#[derive(Debug, Clone)]
pub struct InsideClassifier {
    tris: Vec<[Vec3; 3]>,
    bbox: Aabb,
    ny: usize,
    nz: usize,
    cell: [f64; 2],
    buckets: Vec<Vec<u32>>,
    eps: f64,
}

impl InsideClassifier {
    pub fn new(mesh: &TriMesh) -> Result<Self, MeshError> {
        let topo = mesh.topology();
        if !topo.is_watertight() {
            return Err(MeshError::NonWatertightInput { open_edges: topo.non_manifold_edges });
        }
        let bbox = mesh.bounding_box();
        let tris: Vec<[Vec3; 3]> = (0..mesh.triangles.len()).map(|t| mesh.triangle(t)).collect();
        let side = ((tris.len() as f64).sqrt().ceil() as usize).clamp(1, 256);
        let ext = bbox.extent();
        let (ny, nz) = (side, side);
        let cell = [(ext[1] / ny as f64).max(f64::MIN_POSITIVE), (ext[2] / nz as f64).max(f64::MIN_POSITIVE)];
        let mut buckets = vec![Vec::new(); ny * nz];
        let scale = ext.iter().fold(0.0f64, |a, &b| a.max(b)).max(1e-300);
        let mut me = InsideClassifier { tris, bbox, ny, nz, cell, buckets: Vec::new(), eps: 1e-12 * scale * scale };
        for (t, tri) in me.tris.iter().enumerate() {
            let (ylo, yhi) = minmax(tri.map(|v| v[1]));
            let (zlo, zhi) = minmax(tri.map(|v| v[2]));
            let (j0, j1) = (me.bin(1, ylo), me.bin(1, yhi));
            let (k0, k1) = (me.bin(2, zlo), me.bin(2, zhi));
            for k in k0..=k1 {
                for j in j0..=j1 {
                    buckets[k * ny + j].push(t as u32);
                }
            }
        }
        me.buckets = buckets;
        Ok(me)
    }

    pub fn bounding_box(&self) -> Aabb {
        self.bbox
    }

    fn bin(&self, axis: usize, v: f64) -> usize {
        let n = if axis == 1 { self.ny } else { self.nz };
        let t = ((v - self.bbox.min[axis]) / self.cell[axis - 1]).floor();
        (t.max(0.0) as usize).min(n - 1)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        let ext = self.bbox.extent();
        for attempt in 0..MAX_JITTER_TRIES {
            let q = if attempt == 0 {
                p
            } else {
                // Deterministic low-discrepancy offsets, growing with the attempt.
                let a = attempt as f64;
                let r = 1e-9 * a * ext[1].max(ext[2]).max(1e-300);
                let phi = a * 2.399_963_229_728_653;
                [p[0], p[1] + r * phi.cos(), p[2] + r * phi.sin()]
            };
            if let Some(crossings) = self.cast(q) {
                return crossings % 2 == 1;
            }
        }
        false
    }

    /// Crossings of the +x ray from `q`, or `None` when it grazes an edge.
    fn cast(&self, q: Vec3) -> Option<usize> {
        if q[1] < self.bbox.min[1] || q[1] > self.bbox.max[1] || q[2] < self.bbox.min[2] || q[2] > self.bbox.max[2] {
            return Some(0);
        }
        let bucket = &self.buckets[self.bin(2, q[2]) * self.ny + self.bin(1, q[1])];
        let mut count = 0;
        for &t in bucket {
            let [a, b, c] = self.tris[t as usize];
            let w0 = orient(b, c, q);
            let w1 = orient(c, a, q);
            let w2 = orient(a, b, q);
            let area = w0 + w1 + w2;
            if area.abs() <= self.eps {
                continue;
            }
            let s = area.signum();
            let (u0, u1, u2) = (w0 * s, w1 * s, w2 * s);
            if u0 < -self.eps || u1 < -self.eps || u2 < -self.eps {
                continue;
            }
            if u0 <= self.eps || u1 <= self.eps || u2 <= self.eps {
                return None;
            }
            let x = (w0 * a[0] + w1 * b[0] + w2 * c[0]) / area;
            if x > q[0] {
                count += 1;
            }
        }
        Some(count)
    }
}

/// Twice the signed area of the y-z projection of (a, b, q).
fn orient(a: Vec3, b: Vec3, q: Vec3) -> f64 {
    (b[1] - a[1]) * (q[2] - a[2]) - (b[2] - a[2]) * (q[1] - a[1])
}

fn minmax(v: [f64; 3]) -> (f64, f64) {
    (v[0].min(v[1]).min(v[2]), v[0].max(v[1]).max(v[2]))
}
