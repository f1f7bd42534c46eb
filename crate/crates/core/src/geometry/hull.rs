//! Revolved hull driven by six radial control points on the nose section.

use serde::{Deserialize, Serialize};

use super::profile::HermiteProfile;
use super::revolve::{revolve, uniform_thetas, Ring};
use super::table::ParameterTable;
use super::trimesh::TriMesh;
use super::{GeometryError, Segments};

pub const CONTROL_POINTS: usize = 6;
/// Largest admissible radial offset of a control point (m).
pub const MAX_CONTROL_POINT_M: f64 = 0.2;
/// Rings thinner than this are widened so the surface stays manifold and
/// survives vertex welding on re-import.
const MIN_RING_RADIUS_MM: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullParams {
    /// Radial offsets (m) at uniformly spaced stations along the nose.
    pub control_points: [f64; CONTROL_POINTS],
    pub nose_length: f64,
    pub total_length: f64,
}

impl HullParams {
    pub fn tail_length(&self) -> f64 {
        self.total_length - self.nose_length
    }

    /// Reads `cp1..cp6` (mm), `nose_length` and `total_length` from a table.
    pub fn from_table(table: &ParameterTable) -> Result<Self, GeometryError> {
        let mut control_points = [0.0; CONTROL_POINTS];
        for (k, cp) in control_points.iter_mut().enumerate() {
            *cp = table.value(&format!("cp{}", k + 1))? / 1000.0;
        }
        Ok(HullParams {
            control_points,
            nose_length: table.value("nose_length")?,
            total_length: table.value("total_length")?,
        })
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        for (k, &cp) in self.control_points.iter().enumerate() {
            if !(0.0..=MAX_CONTROL_POINT_M).contains(&cp) {
                return Err(GeometryError::InvalidParams(format!(
                    "control point {} = {cp} m outside [0, {MAX_CONTROL_POINT_M}]",
                    k + 1
                )));
            }
        }
        if !(self.nose_length > 0.0 && self.nose_length < self.total_length) {
            return Err(GeometryError::InvalidParams(format!(
                "nose length {} mm must lie in (0, {})",
                self.nose_length, self.total_length
            )));
        }
        if self.control_points.iter().all(|&c| c == 0.0) {
            return Err(GeometryError::DegenerateProfile);
        }
        Ok(())
    }

    /// Radius profile r(x) in mm over `[0, total_length]`.
    pub fn profile(&self) -> HermiteProfile {
        let mut xs = vec![0.0];
        let mut rs = vec![0.0];
        for (k, &cp) in self.control_points.iter().enumerate() {
            xs.push(self.nose_length * (k + 1) as f64 / CONTROL_POINTS as f64);
            rs.push(cp * 1000.0);
        }
        xs.push(self.total_length);
        rs.push(0.0);
        HermiteProfile::new(xs, rs)
    }
}

/// Fewest slices given to one profile span when the budget allows.
const MIN_SPAN_SLICES: usize = 24;

/// Axial stations: a ring on every interior knot, slices shared between
/// spans by length with at least [`MIN_SPAN_SLICES`] each (fewer only when
/// `axial` is too small to give every span that many).
fn stations(knots: &[f64], total: f64, axial: usize) -> Vec<f64> {
    let spans: Vec<(f64, f64)> = knots.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| b > a).collect();
    let floor = (axial / spans.len()).clamp(1, MIN_SPAN_SLICES);
    let mut xs = Vec::new();
    for (a, b) in spans {
        let m = ((axial as f64 * (b - a) / total).round() as usize).max(floor);
        xs.extend((0..m).map(|i| a + (b - a) * i as f64 / m as f64));
    }
    xs.retain(|&x| x > 0.0);
    xs
}

/// Triangulated surface of revolution: about `segments.axial` slices along
/// the axis, `segments.angular` around it.
pub fn instantiate_hull(p: &HullParams, segments: Segments) -> Result<TriMesh, GeometryError> {
    segments.check()?;
    p.validate()?;
    let profile = p.profile();
    let rings: Vec<Ring> = stations(profile.knots().0, p.total_length, segments.axial)
        .into_iter()
        .map(|x| Ring { x, r: profile.eval(x).max(MIN_RING_RADIUS_MM) })
        .collect();
    let surf = revolve(0.0, &rings, p.total_length, &uniform_thetas(segments.angular), |_, _| false);
    Ok(surf.mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(cps: [f64; 6], nose: f64) -> HullParams {
        HullParams { control_points: cps, nose_length: nose, total_length: 1000.0 }
    }

    #[test]
    fn uniform_control_points_mirror_symmetric() {
        let m = instantiate_hull(&params([0.1; 6], 500.0), Segments::new(32, 64)).unwrap();
        assert!(m.is_closed_outward());
        for v in &m.vertices {
            let found = m.vertices.iter().any(|w| {
                (w[0] - v[0]).abs() < 1e-9 && (w[1] - v[1]).abs() < 1e-9 && (w[2] + v[2]).abs() < 1e-9
            });
            assert!(found, "no mirror image of {v:?}");
        }
    }

    #[test]
    fn zero_profile_is_degenerate() {
        let err = instantiate_hull(&params([0.0; 6], 500.0), Segments::new(32, 64)).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateProfile));
    }

    #[test]
    fn too_few_angular_segments() {
        let err = instantiate_hull(&params([0.1; 6], 500.0), Segments::new(2, 64)).unwrap_err();
        assert!(matches!(err, GeometryError::ResolutionTooLow { .. }));
    }

    #[test]
    fn nose_tail_partition() {
        let p = params([0.1; 6], 321.5);
        assert_eq!(p.nose_length + p.tail_length(), p.total_length);
    }

    #[test]
    fn bundled_table_reads_back() {
        let p = HullParams::from_table(&ParameterTable::revolved_hull()).unwrap();
        assert_eq!(p.control_points, [0.1; 6]);
        assert_eq!(p.nose_length, 500.0);
        assert_eq!(p.total_length, 1000.0);
    }
}
