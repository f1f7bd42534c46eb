//! Surfaces of revolution about the x axis, closed by apex vertices.

use super::trimesh::TriMesh;
use super::vec3::{cross, dot, sub, Vec3};

/// Station along the axis: abscissa and radius (mm).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ring {
    pub x: f64,
    pub r: f64,
}

/// Builds a closed body from a front apex, a list of rings and a back apex.
///
/// Vertex layout: index 0 is the front apex, ring `i` angle `j` is
/// `1 + i * thetas.len() + j`, the back apex is last. `skip(i, j)` removes the
/// quad between ring `i`, ring `i + 1`, angle `j` and angle `j + 1`.
pub(crate) struct RevolvedSurface {
    pub mesh: TriMesh,
    pub n_theta: usize,
}

impl RevolvedSurface {
    pub fn ring_vertex(&self, ring: usize, theta: usize) -> u32 {
        (1 + ring * self.n_theta + theta % self.n_theta) as u32
    }
}

pub(crate) fn revolve(
    front_x: f64,
    rings: &[Ring],
    back_x: f64,
    thetas: &[f64],
    skip: impl Fn(usize, usize) -> bool,
) -> RevolvedSurface {
    let nt = thetas.len();
    let (sin, cos): (Vec<f64>, Vec<f64>) = thetas.iter().map(|t| t.sin_cos()).unzip();
    let mut vertices = Vec::with_capacity(2 + rings.len() * nt);
    vertices.push([front_x, 0.0, 0.0]);
    for ring in rings {
        for j in 0..nt {
            vertices.push([ring.x, ring.r * cos[j], ring.r * sin[j]]);
        }
    }
    vertices.push([back_x, 0.0, 0.0]);
    let back = (vertices.len() - 1) as u32;
    let rv = |i: usize, j: usize| (1 + i * nt + j % nt) as u32;

    let mut triangles = Vec::with_capacity(2 * nt * rings.len());
    for j in 0..nt {
        triangles.push([0, rv(0, j + 1), rv(0, j)]);
    }
    for i in 0..rings.len() - 1 {
        for j in 0..nt {
            if skip(i, j) {
                continue;
            }
            let (a, b, c, d) = (rv(i, j), rv(i, j + 1), rv(i + 1, j + 1), rv(i + 1, j));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let last = rings.len() - 1;
    for j in 0..nt {
        triangles.push([back, rv(last, j), rv(last, j + 1)]);
    }
    RevolvedSurface { mesh: TriMesh { vertices, triangles }, n_theta: nt }
}

/// Adds the quad `a b c d` as two triangles wound so that the face normal
/// points along `outward`.
pub(crate) fn push_oriented_quad(mesh: &mut TriMesh, q: [u32; 4], outward: Vec3) {
    let p = |i: u32| mesh.vertices[i as usize];
    let n = cross(sub(p(q[2]), p(q[0])), sub(p(q[3]), p(q[1])));
    let [a, b, c, d] = if dot(n, outward) >= 0.0 { q } else { [q[3], q[2], q[1], q[0]] };
    mesh.triangles.push([a, b, c]);
    mesh.triangles.push([a, c, d]);
}

pub(crate) fn uniform_thetas(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64).collect()
}
