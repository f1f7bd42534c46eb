//! Winged body: hemispherical nose, cylindrical fuselage, conical tail and
//! two rectangular wing slabs at mid-fuselage.
//!
//! The wings leave the fuselage through holes that are exact rectangles in
//! the cylinder's `(x, theta)` parameter space: a slab of thickness `t`
//! meets a cylinder of radius `R` on the lines `theta = ±asin(t / 2R)` and on
//! the circular arcs at the leading and trailing edge. The angular grid is
//! augmented with those angles, so the wing faces reuse fuselage vertices and
//! the union is conforming without a general mesh boolean.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::revolve::{push_oriented_quad, revolve, uniform_thetas, Ring};
use super::table::ParameterTable;
use super::trimesh::TriMesh;
use super::{GeometryError, Segments};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WingedBodyParams {
    /// Radius of the nose hemisphere and of the fuselage (mm).
    pub nose_radius: f64,
    pub fuselage_length: f64,
    pub tail_length: f64,
    pub thickness_wing: f64,
    /// Wing span measured outward from the fuselage surface (mm).
    pub half_span: f64,
    pub chord: f64,
}

impl WingedBodyParams {
    pub fn from_table(table: &ParameterTable) -> Result<Self, GeometryError> {
        Ok(WingedBodyParams {
            nose_radius: table.value("nose_radius")?,
            fuselage_length: table.value("fuselage_length")?,
            tail_length: table.value("tail_length")?,
            thickness_wing: table.value("thickness_wing")?,
            half_span: table.value("half_span")?,
            chord: table.value("chord")?,
        })
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let named = [
            ("nose_radius", self.nose_radius),
            ("fuselage_length", self.fuselage_length),
            ("tail_length", self.tail_length),
            ("thickness_wing", self.thickness_wing),
            ("half_span", self.half_span),
            ("chord", self.chord),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GeometryError::NonPositiveParam(name.to_string()));
            }
        }
        if self.chord >= self.fuselage_length {
            return Err(GeometryError::SelfIntersection(format!(
                "chord {} mm does not fit on fuselage of length {} mm",
                self.chord, self.fuselage_length
            )));
        }
        if self.thickness_wing >= 2.0 * self.nose_radius {
            return Err(GeometryError::SelfIntersection(format!(
                "wing thickness {} mm exceeds fuselage diameter",
                self.thickness_wing
            )));
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.nose_radius + self.fuselage_length + self.tail_length
    }

    /// Closed-form volume of hemisphere + cylinder + cone (mm³).
    pub fn fuselage_volume(&self) -> f64 {
        let r = self.nose_radius;
        PI * r * r * (2.0 * r / 3.0 + self.fuselage_length + self.tail_length / 3.0)
    }

    /// Closed-form volume of one wing outside the cylinder (mm³).
    pub fn wing_volume(&self) -> f64 {
        let (r, h) = (self.nose_radius, 0.5 * self.thickness_wing);
        let tip = r + self.half_span;
        // Area between the chord-normal section of the cylinder and the tip line.
        let segment = h * (r * r - h * h).sqrt() + r * r * (h / r).asin();
        self.chord * (2.0 * h * tip - segment)
    }

    pub fn solid_volume(&self) -> f64 {
        self.fuselage_volume() + 2.0 * self.wing_volume()
    }
}

/// Watertight winged body.
pub fn instantiate_winged(p: &WingedBodyParams, segments: Segments) -> Result<TriMesh, GeometryError> {
    build(p, segments, true)
}

/// The same body without wings.
pub fn instantiate_fuselage(p: &WingedBodyParams, segments: Segments) -> Result<TriMesh, GeometryError> {
    build(p, segments, false)
}

fn build(p: &WingedBodyParams, segments: Segments, wings: bool) -> Result<TriMesh, GeometryError> {
    segments.check()?;
    p.validate()?;
    let r = p.nose_radius;
    let alpha = (0.5 * p.thickness_wing / r).asin();

    let mut thetas = uniform_thetas(segments.angular);
    if wings {
        thetas.extend([alpha, 2.0 * PI - alpha, PI - alpha, PI + alpha]);
        thetas.sort_by(f64::total_cmp);
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    }
    let index_of = |target: f64| {
        thetas
            .iter()
            .position(|&t| (t - target).abs() < 1e-12)
            .expect("wing angle present in grid")
    };

    let polar = (segments.axial / 2).max(2);
    let mut rings = Vec::new();
    for k in 1..=polar {
        let phi = 0.5 * PI * k as f64 / polar as f64;
        rings.push(Ring { x: r - r * phi.cos(), r: r * phi.sin() });
    }
    // The equator ring closes the hemisphere exactly.
    rings.last_mut().unwrap().x = r;
    rings.last_mut().unwrap().r = r;
    let x0 = r + 0.5 * (p.fuselage_length - p.chord);
    let x1 = x0 + p.chord;
    let wing_ring = rings.len();
    if wings {
        rings.push(Ring { x: x0, r });
        rings.push(Ring { x: x1, r });
    }
    let tail_start = r + p.fuselage_length;
    rings.push(Ring { x: tail_start, r });
    let cone = (segments.axial / 8).max(1);
    for k in 1..cone {
        let f = k as f64 / cone as f64;
        rings.push(Ring { x: tail_start + f * p.tail_length, r: r * (1.0 - f) });
    }

    let nt = thetas.len();
    let (right, left) = if wings {
        let span = |from: usize, to: usize| {
            let mut js = vec![from];
            let mut j = from;
            while j != to {
                j = (j + 1) % nt;
                js.push(j);
            }
            js
        };
        (span(index_of(2.0 * PI - alpha), index_of(alpha)), span(index_of(PI - alpha), index_of(PI + alpha)))
    } else {
        (Vec::new(), Vec::new())
    };
    let in_hole = |i: usize, j: usize| {
        wings
            && i == wing_ring
            && (right[..right.len() - 1].contains(&j) || left[..left.len() - 1].contains(&j))
    };
    let surf = revolve(0.0, &rings, p.total_length(), &thetas, in_hole);
    let mut mesh = surf.mesh.clone();
    if wings {
        for (side, js) in [(1.0, &right), (-1.0, &left)] {
            add_wing(&mut mesh, &surf, wing_ring, js, side, r + p.half_span, [x0, x1], &thetas, r);
        }
    }
    Ok(mesh)
}

#[allow(clippy::too_many_arguments)]
fn add_wing(
    mesh: &mut TriMesh,
    surf: &super::revolve::RevolvedSurface,
    ring: usize,
    js: &[usize],
    side: f64,
    tip: f64,
    xs: [f64; 2],
    thetas: &[f64],
    r: f64,
) {
    let y_tip = side * tip;
    let root0: Vec<u32> = js.iter().map(|&j| surf.ring_vertex(ring, j)).collect();
    let root1: Vec<u32> = js.iter().map(|&j| surf.ring_vertex(ring + 1, j)).collect();
    let mut tip0 = Vec::with_capacity(js.len());
    let mut tip1 = Vec::with_capacity(js.len());
    for &j in js {
        let z = r * thetas[j].sin();
        tip0.push(mesh.vertices.len() as u32);
        mesh.vertices.push([xs[0], y_tip, z]);
        tip1.push(mesh.vertices.len() as u32);
        mesh.vertices.push([xs[1], y_tip, z]);
    }
    for m in 0..js.len() - 1 {
        push_oriented_quad(mesh, [root0[m], root0[m + 1], tip0[m + 1], tip0[m]], [-1.0, 0.0, 0.0]);
        push_oriented_quad(mesh, [root1[m], root1[m + 1], tip1[m + 1], tip1[m]], [1.0, 0.0, 0.0]);
        push_oriented_quad(mesh, [tip0[m], tip1[m], tip1[m + 1], tip0[m + 1]], [0.0, side, 0.0]);
    }
    let last = js.len() - 1;
    for k in [0, last] {
        // The end with the smaller z is the lower face.
        let z = mesh.vertices[tip0[k] as usize][2];
        let other = mesh.vertices[tip0[last - k] as usize][2];
        let outward = if z < other { -1.0 } else { 1.0 };
        push_oriented_quad(mesh, [root0[k], root1[k], tip1[k], tip0[k]], [0.0, 0.0, outward]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn midpoints() -> WingedBodyParams {
        WingedBodyParams::from_table(&ParameterTable::winged_body()).unwrap()
    }

    #[test]
    fn table_midpoints_are_watertight_genus_zero() {
        let m = instantiate_winged(&midpoints(), Segments::new(64, 64)).unwrap();
        let topo = m.topology();
        assert!(topo.is_watertight());
        assert_eq!(topo.misoriented_edges, 0);
        assert_eq!(topo.euler_characteristic(), 2);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn chord_longer_than_fuselage() {
        let mut p = midpoints();
        p.chord = 500.0;
        assert!(matches!(instantiate_winged(&p, Segments::new(64, 64)), Err(GeometryError::SelfIntersection(_))));
    }

    #[test]
    fn non_positive_parameter() {
        let mut p = midpoints();
        p.tail_length = 0.0;
        let err = instantiate_winged(&p, Segments::new(64, 64)).unwrap_err();
        assert!(matches!(err, GeometryError::NonPositiveParam(n) if n == "tail_length"));
    }
}
