//! Parametric seed designs and the triangle-mesh exchange type.

mod hull;
mod profile;
mod revolve;
mod table;
mod trimesh;
pub mod vec3;
mod winged;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hull::{instantiate_hull, HullParams, CONTROL_POINTS, MAX_CONTROL_POINT_M};
pub use profile::HermiteProfile;
pub use table::{apply_parameters, ParameterEntry, ParameterTable};
pub use trimesh::{Aabb, Topology, TriMesh};
pub use winged::{instantiate_fuselage, instantiate_winged, WingedBodyParams};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{name}` = {value} outside [{min}, {max}]")]
    OutOfBounds { name: String, value: f64, min: f64, max: f64 },
    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(String),
    #[error("parameter `{0}` violates min <= default <= max")]
    InvalidEntry(String),
    #[error("malformed parameter sidecar: {0}")]
    Sidecar(String),
    #[error("profile radius is zero everywhere")]
    DegenerateProfile,
    #[error("resolution too low: {what} = {got}, need at least {min}")]
    ResolutionTooLow { what: &'static str, got: usize, min: usize },
    #[error("self-intersecting geometry: {0}")]
    SelfIntersection(String),
    #[error("parameter `{0}` must be positive")]
    NonPositiveParam(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Tessellation resolution of the revolved designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segments {
    /// Facets around the axis.
    pub angular: usize,
    /// Slices along the axis.
    pub axial: usize,
}

impl Segments {
    pub fn new(angular: usize, axial: usize) -> Self {
        Segments { angular, axial }
    }

    fn check(&self) -> Result<(), GeometryError> {
        if self.angular < 3 {
            return Err(GeometryError::ResolutionTooLow { what: "angular", got: self.angular, min: 3 });
        }
        if self.axial < 2 {
            return Err(GeometryError::ResolutionTooLow { what: "axial", got: self.axial, min: 2 });
        }
        Ok(())
    }
}

impl Default for Segments {
    fn default() -> Self {
        Segments { angular: 64, axial: 128 }
    }
}
