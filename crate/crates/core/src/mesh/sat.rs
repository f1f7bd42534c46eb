//! Triangle / axis-aligned box overlap by the separating-axis theorem.

use crate::geometry::vec3::{cross, dot, sub, Vec3};

/// True when the closed triangle and the closed box `[lo, hi]` intersect.
pub fn triangle_box_overlap(tri: &[Vec3; 3], lo: Vec3, hi: Vec3) -> bool {
    let c = [(lo[0] + hi[0]) * 0.5, (lo[1] + hi[1]) * 0.5, (lo[2] + hi[2]) * 0.5];
    let h = [(hi[0] - lo[0]) * 0.5, (hi[1] - lo[1]) * 0.5, (hi[2] - lo[2]) * 0.5];
    let v = [sub(tri[0], c), sub(tri[1], c), sub(tri[2], c)];

    for a in 0..3 {
        let (mn, mx) = span([v[0][a], v[1][a], v[2][a]]);
        if mn > h[a] || mx < -h[a] {
            return false;
        }
    }

    let e = [sub(v[1], v[0]), sub(v[2], v[1]), sub(v[0], v[2])];
    for edge in &e {
        for a in 0..3 {
            let mut axis = [0.0; 3];
            axis[a] = 1.0;
            let l = cross(axis, *edge);
            if l == [0.0; 3] {
                continue;
            }
            if separated(&v, l, h) {
                return false;
            }
        }
    }

    let n = cross(e[0], e[1]);
    if n != [0.0; 3] && separated(&v, n, h) {
        return false;
    }
    true
}

fn span(p: [f64; 3]) -> (f64, f64) {
    (p[0].min(p[1]).min(p[2]), p[0].max(p[1]).max(p[2]))
}

fn separated(v: &[Vec3; 3], axis: Vec3, h: Vec3) -> bool {
    let (mn, mx) = span([dot(v[0], axis), dot(v[1], axis), dot(v[2], axis)]);
    let r = h[0] * axis[0].abs() + h[1] * axis[1].abs() + h[2] * axis[2].abs();
    mn > r || mx < -r
}
