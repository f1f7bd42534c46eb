use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::vec3::{cross, dot, normalize, sub, Vec3};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb { min: [f64::INFINITY; 3], max: [f64::NEG_INFINITY; 3] }
    }

    pub fn grow(&mut self, p: Vec3) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|k| self.min[k] > self.max[k])
    }

    pub fn extent(&self) -> Vec3 {
        sub(self.max, self.min)
    }

    pub fn center(&self) -> Vec3 {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// True when `other` lies in the open interior of `self`.
    pub fn strictly_contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] < other.min[k] && other.max[k] < self.max[k])
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] && other.min[k] <= self.max[k])
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e[0] * e[1] * e[2]
    }
}

/// Edge-level topology summary of a triangle mesh.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    /// Undirected edges used by a number of triangles other than two.
    pub non_manifold_edges: usize,
    /// Directed edges appearing more than once (inconsistent winding).
    pub misoriented_edges: usize,
}

impl Topology {
    pub fn is_watertight(&self) -> bool {
        self.faces > 0 && self.non_manifold_edges == 0
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.faces as i64
    }
}

/// Indexed triangle surface mesh. Lengths are millimetres.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        TriMesh { vertices, triangles }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    #[inline]
    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle(t);
        normalize(cross(sub(b, a), sub(c, a)))
    }

    /// Unit normal per triangle, following the right-hand rule on vertex order.
    pub fn normals(&self) -> Vec<Vec3> {
        (0..self.triangles.len()).map(|t| self.triangle_normal(t)).collect()
    }

    pub fn bounding_box(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for tri in &self.triangles {
            for &v in tri {
                bb.grow(self.vertices[v as usize]);
            }
        }
        bb
    }

    /// Enclosed volume by the divergence theorem; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        // Shift to the box centre so large coordinates do not cancel badly.
        let c = if self.is_empty() { [0.0; 3] } else { self.bounding_box().center() };
        let mut vol = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, d] = self.triangle(t);
            let (a, b, d) = (sub(a, c), sub(b, c), sub(d, c));
            vol += dot(a, cross(b, d));
        }
        vol / 6.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle(t);
                0.5 * super::vec3::norm(cross(sub(b, a), sub(c, a)))
            })
            .sum()
    }

    pub fn topology(&self) -> Topology {
        let mut undirected: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.triangles.len() * 2);
        let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.triangles.len() * 3);
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                used[a as usize] = true;
                *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        Topology {
            vertices: used.iter().filter(|&&u| u).count(),
            edges: undirected.len(),
            faces: self.triangles.len(),
            non_manifold_edges: undirected.values().filter(|&&n| n != 2).count(),
            misoriented_edges: directed.values().filter(|&&n| n > 1).count(),
        }
    }

    pub fn is_watertight(&self) -> bool {
        self.topology().is_watertight()
    }

    /// Watertight, consistently wound, and enclosing positive volume.
    pub fn is_closed_outward(&self) -> bool {
        let topo = self.topology();
        topo.is_watertight() && topo.misoriented_edges == 0 && self.signed_volume() > 0.0
    }

    /// Reflection through the plane `x[axis] = 0`, with winding flipped to keep orientation.
    pub fn mirrored(&self, axis: usize) -> TriMesh {
        let vertices = self
            .vertices
            .iter()
            .map(|&v| {
                let mut w = v;
                w[axis] = -w[axis];
                w
            })
            .collect();
        let triangles = self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect();
        TriMesh { vertices, triangles }
    }

    pub fn translated(&self, offset: Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|&v| super::vec3::add(v, offset)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Axis-aligned box as 12 outward-wound triangles.
    pub fn cuboid(min: Vec3, max: Vec3) -> TriMesh {
        let v = |i: usize| {
            [
                if i & 1 == 0 { min[0] } else { max[0] },
                if i & 2 == 0 { min[1] } else { max[1] },
                if i & 4 == 0 { min[2] } else { max[2] },
            ]
        };
        let vertices = (0..8).map(v).collect();
        let quads: [[u32; 4]; 6] = [
            [0, 4, 6, 2], // -x
            [1, 3, 7, 5], // +x
            [0, 1, 5, 4], // -y
            [2, 6, 7, 3], // +y
            [0, 2, 3, 1], // -z
            [4, 5, 7, 6], // +z
        ];
        let mut triangles = Vec::with_capacity(12);
        for [a, b, c, d] in quads {
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
        TriMesh { vertices, triangles }
    }

    /// Geodesic-free UV sphere, used for fixtures.
    pub fn uv_sphere(center: Vec3, radius: f64, slices: usize, stacks: usize) -> TriMesh {
        let mut vertices = vec![[center[0], center[1], center[2] - radius]];
        for i in 1..stacks {
            let phi = std::f64::consts::PI * i as f64 / stacks as f64;
            let (z, r) = (-radius * phi.cos(), radius * phi.sin());
            for j in 0..slices {
                let th = 2.0 * std::f64::consts::PI * j as f64 / slices as f64;
                vertices.push([center[0] + r * th.cos(), center[1] + r * th.sin(), center[2] + z]);
            }
        }
        vertices.push([center[0], center[1], center[2] + radius]);
        let top = (vertices.len() - 1) as u32;
        let ring = |i: usize, j: usize| (1 + (i - 1) * slices + (j % slices)) as u32;
        let mut triangles = Vec::new();
        for j in 0..slices {
            triangles.push([0, ring(1, j + 1), ring(1, j)]);
        }
        for i in 1..stacks - 1 {
            for j in 0..slices {
                let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j + 1), ring(i + 1, j));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        for j in 0..slices {
            triangles.push([top, ring(stacks - 1, j), ring(stacks - 1, j + 1)]);
        }
        TriMesh { vertices, triangles }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_is_closed_and_outward() {
        let m = TriMesh::cuboid([0.0; 3], [1.0, 2.0, 3.0]);
        let topo = m.topology();
        assert!(topo.is_watertight());
        assert_eq!(topo.misoriented_edges, 0);
        assert_eq!(topo.euler_characteristic(), 2);
        assert!((m.signed_volume() - 6.0).abs() < 1e-12);
        assert!((m.surface_area() - 22.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_fixture_is_closed() {
        let m = TriMesh::uv_sphere([1.0, 2.0, 3.0], 2.0, 24, 12);
        assert!(m.is_closed_outward());
        assert_eq!(m.topology().euler_characteristic(), 2);
    }

    #[test]
    fn mirror_keeps_orientation() {
        let m = TriMesh::cuboid([0.0; 3], [1.0, 1.0, 1.0]).mirrored(1);
        assert!(m.is_closed_outward());
    }

    #[test]
    fn open_mesh_is_not_watertight() {
        let mut m = TriMesh::cuboid([0.0; 3], [1.0; 3]);
        m.triangles.pop();
        assert!(!m.is_watertight());
    }
}
