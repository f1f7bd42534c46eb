//! JSON run configuration: one document selects the mode and parameterizes
//! geometry, meshing, the flow backend, sampling and the optimizer.
//!
//! Unknown keys are rejected with their path. Speeds are in m/s, lengths in mm.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ParameterTable, Segments};

/// Largest supported design-space dimension.
pub const MAX_DIMENSION: usize = 20;
pub const DEFAULT_SPEED_OF_SOUND: f64 = 340.0;
pub const DEFAULT_KAPPA: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("unknown key `{key}` at `{path}`")]
    UnknownKey { path: String, key: String },
    #[error("invalid config at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("mode `{mode}` requires a `{section}` section")]
    MissingSection { mode: &'static str, section: &'static str },
    #[error("section `{section}` is not allowed in mode `{mode}`")]
    UnexpectedSection { mode: &'static str, section: &'static str },
    #[error("`{name}` = {value} violates bound {bound}")]
    RangeViolation { name: String, value: f64, bound: String },
    #[error("design space has {dimension} parameters, at most {max} supported")]
    DimensionLimitExceeded { dimension: usize, max: usize },
    #[error("design parameter `{0}` listed twice")]
    DuplicateParameter(String),
    #[error("{0}")]
    Incompatible(String),
    #[error("design parameter `{0}` is not in the seed parameter table")]
    UnknownParameter(String),
    #[error("range of `{name}` [{min}, {max}] exceeds the table bounds [{table_min}, {table_max}]")]
    BoundsMismatch { name: String, min: f64, max: f64, table_min: f64, table_max: f64 },
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    DataGeneration,
    Cfd,
    Optimize,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::DataGeneration => "data_generation",
            Mode::Cfd => "cfd",
            Mode::Optimize => "optimize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSpec {
    /// m/s
    pub inlet_speed: f64,
    /// kg/m^3
    pub density: f64,
    /// N s/m^2
    pub dynamic_viscosity: f64,
    /// Fraction in (0, 1).
    pub turbulence_intensity: f64,
    /// Inlet speeds at or above this (m/s) are rejected.
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
}

fn default_speed_of_sound() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}

impl FluidSpec {
    /// m^2/s
    pub fn kinematic_viscosity(&self) -> f64 {
        self.dynamic_viscosity / self.density
    }
}

/// Gaps between the body bounding box and the domain walls, as multiples of
/// the body extent along the same axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainScale {
    pub upstream: f64,
    pub downstream: f64,
    pub lateral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityThresholds {
    pub max_aspect_ratio: f64,
    /// Degrees.
    pub max_non_orthogonality: f64,
    pub max_skewness: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        QualityThresholds { max_aspect_ratio: 100.0, max_non_orthogonality: 65.0, max_skewness: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub domain_scale: DomainScale,
    /// Background cells along x, y, z.
    pub base_cells: [usize; 3],
    pub surface_refinement_levels: u32,
    pub max_retries: u32,
    #[serde(default)]
    pub quality: QualityThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedDesign {
    RevolvedHull,
    WingedBody,
    ExternalStl,
}

impl SeedDesign {
    /// Bundled parameter table, if the design is parametric.
    pub fn table(self) -> Option<ParameterTable> {
        match self {
            SeedDesign::RevolvedHull => Some(ParameterTable::revolved_hull()),
            SeedDesign::WingedBody => Some(ParameterTable::winged_body()),
            SeedDesign::ExternalStl => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpaceSpec {
    pub parameters: Vec<ParameterRange>,
    pub seed_design: SeedDesign,
    #[serde(default)]
    pub segments: Segments,
}

impl DesignSpaceSpec {
    pub fn dimension(&self) -> usize {
        self.parameters.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.parameters.iter().map(|p| p.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acquisition {
    #[default]
    Lcb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoSpec {
    /// Total evaluations, initial design included.
    pub budget: usize,
    pub initial_samples: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Fixed white-noise variance on standardized observations.
    pub noise_variance: f64,
    #[serde(default)]
    pub acquisition: Acquisition,
    /// One shared lengthscale instead of one per dimension.
    #[serde(default)]
    pub isotropic: bool,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    UniformRandom,
    LhsMaximin,
    LhsMincorr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub method: SamplingMethod,
    pub count: usize,
    pub batch_size: usize,
    /// Swap attempts for the Latin hypercube methods.
    #[serde(default = "default_lhs_iterations")]
    pub lhs_iterations: usize,
}

fn default_lhs_iterations() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverBackend {
    Internal {
        max_steps: usize,
        residual_tol: f64,
        /// Target inlet speed in lattice units.
        #[serde(default = "default_lattice_velocity")]
        lattice_velocity: f64,
    },
    ExternalCommand {
        argv: Vec<String>,
        timeout_s: f64,
        /// Turbulence length scale as a fraction of body length.
        #[serde(default = "default_length_fraction")]
        length_scale_fraction: f64,
        #[serde(default = "default_c_mu")]
        c_mu: f64,
    },
}

fn default_lattice_velocity() -> f64 {
    0.05
}
fn default_length_fraction() -> f64 {
    0.07
}
fn default_c_mu() -> f64 {
    0.09
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub fluid: FluidSpec,
    pub mesh: MeshSpec,
    pub design: DesignSpaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<BoSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSpec>,
    pub solver_backend: SolverBackend,
    pub output_dir: String,
    pub rng_seed: u64,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ConfigError::MalformedJson(e.to_string()))?;
    let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        match unknown_key(&message) {
            Some(key) => ConfigError::UnknownKey { path, key },
            None => ConfigError::Schema { path, message },
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn unknown_key(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

fn check(name: &str, value: f64, ok: bool, bound: &str) -> Result<(), ConfigError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::RangeViolation { name: name.to_string(), value, bound: bound.to_string() })
    }
}

fn positive(name: &str, value: f64) -> Result<(), ConfigError> {
    check(name, value, value > 0.0, "> 0")
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mode = self.mode.as_str();
        match (self.mode, &self.optimizer, &self.sampling) {
            (Mode::Optimize, None, _) => return Err(ConfigError::MissingSection { mode, section: "optimizer" }),
            (Mode::DataGeneration, _, None) => {
                return Err(ConfigError::MissingSection { mode, section: "sampling" })
            }
            (Mode::Optimize | Mode::Cfd, _, Some(_)) => {
                return Err(ConfigError::UnexpectedSection { mode, section: "sampling" })
            }
            (Mode::DataGeneration | Mode::Cfd, Some(_), _) => {
                return Err(ConfigError::UnexpectedSection { mode, section: "optimizer" })
            }
            _ => {}
        }
        if self.output_dir.is_empty() {
            return Err(ConfigError::Schema {
                path: "output_dir".into(),
                message: "must be a nonempty path".into(),
            });
        }
        self.validate_fluid()?;
        self.validate_mesh()?;
        self.validate_design()?;
        if let Some(bo) = &self.optimizer {
            validate_bo(bo)?;
        }
        if let Some(s) = &self.sampling {
            validate_sampling(s)?;
        }
        self.validate_backend()
    }

    fn validate_fluid(&self) -> Result<(), ConfigError> {
        let f = &self.fluid;
        positive("fluid.inlet_speed", f.inlet_speed)?;
        positive("fluid.density", f.density)?;
        positive("fluid.dynamic_viscosity", f.dynamic_viscosity)?;
        let ti = f.turbulence_intensity;
        check("fluid.turbulence_intensity", ti, ti > 0.0 && ti < 1.0, "in (0, 1)")?;
        positive("fluid.speed_of_sound", f.speed_of_sound)?;
        let nu = f.kinematic_viscosity();
        check("fluid.kinematic_viscosity", nu, nu > 0.0, "> 0")?;
        check(
            "fluid.inlet_speed",
            f.inlet_speed,
            f.inlet_speed < f.speed_of_sound,
            &format!("< speed_of_sound ({})", f.speed_of_sound),
        )
    }

    fn validate_mesh(&self) -> Result<(), ConfigError> {
        let m = &self.mesh;
        positive("mesh.domain_scale.upstream", m.domain_scale.upstream)?;
        positive("mesh.domain_scale.downstream", m.domain_scale.downstream)?;
        positive("mesh.domain_scale.lateral", m.domain_scale.lateral)?;
        for (axis, &n) in ["x", "y", "z"].iter().zip(&m.base_cells) {
            check(&format!("mesh.base_cells.{axis}"), n as f64, n >= 1, ">= 1")?;
        }
        check("mesh.max_retries", m.max_retries as f64, m.max_retries >= 1, ">= 1")?;
        positive("mesh.quality.max_aspect_ratio", m.quality.max_aspect_ratio)?;
        let no = m.quality.max_non_orthogonality;
        check("mesh.quality.max_non_orthogonality", no, no > 0.0 && no < 90.0, "in (0, 90)")?;
        positive("mesh.quality.max_skewness", m.quality.max_skewness)
    }

    fn validate_design(&self) -> Result<(), ConfigError> {
        let d = &self.design;
        if d.dimension() > MAX_DIMENSION {
            return Err(ConfigError::DimensionLimitExceeded { dimension: d.dimension(), max: MAX_DIMENSION });
        }
        match (self.mode, d.seed_design) {
            (Mode::Cfd, SeedDesign::ExternalStl) => {
                if d.dimension() > 0 {
                    return Err(ConfigError::Incompatible(
                        "an external STL design has no parameters to vary".into(),
                    ));
                }
            }
            (_, SeedDesign::ExternalStl) => {
                return Err(ConfigError::Incompatible(format!(
                    "seed_design external_stl is only valid in cfd mode, not {}",
                    self.mode.as_str()
                )))
            }
            (Mode::Cfd, _) => {}
            _ => {
                let n = d.dimension() as f64;
                check("design.parameters", n, n >= 1.0, ">= 1 parameter")?;
            }
        }
        let mut seen = HashSet::new();
        for p in &d.parameters {
            if !seen.insert(p.name.as_str()) {
                return Err(ConfigError::DuplicateParameter(p.name.clone()));
            }
            let base = format!("design.parameters.{}", p.name);
            check(&format!("{base}.min"), p.min, p.min.is_finite(), "finite")?;
            check(&format!("{base}.max"), p.max, p.max > p.min, &format!("> min ({})", p.min))?;
        }
        let s = d.segments;
        check("design.segments.angular", s.angular as f64, s.angular >= 3, ">= 3")?;
        check("design.segments.axial", s.axial as f64, s.axial >= 2, ">= 2")
    }

    fn validate_backend(&self) -> Result<(), ConfigError> {
        match &self.solver_backend {
            SolverBackend::Internal { max_steps, residual_tol, lattice_velocity } => {
                let n = *max_steps as f64;
                check("solver_backend.max_steps", n, *max_steps >= 1, ">= 1")?;
                positive("solver_backend.residual_tol", *residual_tol)?;
                let u = *lattice_velocity;
                check("solver_backend.lattice_velocity", u, u > 0.0 && u <= 0.1, "in (0, 0.1]")
            }
            SolverBackend::ExternalCommand { argv, timeout_s, length_scale_fraction, c_mu } => {
                if argv.is_empty() || argv[0].is_empty() {
                    return Err(ConfigError::Schema {
                        path: "solver_backend.argv".into(),
                        message: "needs at least the program name".into(),
                    });
                }
                positive("solver_backend.timeout_s", *timeout_s)?;
                positive("solver_backend.length_scale_fraction", *length_scale_fraction)?;
                positive("solver_backend.c_mu", *c_mu)
            }
        }
    }
}

fn validate_bo(bo: &BoSpec) -> Result<(), ConfigError> {
    check("optimizer.initial_samples", bo.initial_samples as f64, bo.initial_samples >= 1, ">= 1")?;
    check(
        "optimizer.budget",
        bo.budget as f64,
        bo.budget > bo.initial_samples,
        &format!("> initial_samples ({})", bo.initial_samples),
    )?;
    check("optimizer.kappa", bo.kappa, bo.kappa >= 0.0, ">= 0")?;
    let nv = bo.noise_variance;
    check("optimizer.noise_variance", nv, (0.0..=1.0).contains(&nv), "in [0, 1]")
}

fn validate_sampling(s: &SamplingSpec) -> Result<(), ConfigError> {
    check("sampling.count", s.count as f64, s.count >= 1, ">= 1")?;
    check("sampling.batch_size", s.batch_size as f64, s.batch_size >= 1, ">= 1")?;
    check(
        "sampling.batch_size",
        s.batch_size as f64,
        s.batch_size <= s.count,
        &format!("<= count ({})", s.count),
    )?;
    check("sampling.lhs_iterations", s.lhs_iterations as f64, s.lhs_iterations >= 1, ">= 1")
}

/// Checks every design parameter against the seed design's table.
pub fn validate_against_seed(config: &RunConfig, table: &ParameterTable) -> Result<(), ConfigError> {
    for p in &config.design.parameters {
        let entry = table.get(&p.name).ok_or_else(|| ConfigError::UnknownParameter(p.name.clone()))?;
        if p.min < entry.min || p.max > entry.max {
            return Err(ConfigError::BoundsMismatch {
                name: p.name.clone(),
                min: p.min,
                max: p.max,
                table_min: entry.min,
                table_max: entry.max,
            });
        }
    }
    Ok(())
}

/// Example configurations for the three reference vehicles.
pub mod fixtures {
    /// Unmanned underwater vehicle hull in seawater at 2.25 mph.
    pub const UUV: &str = include_str!("../fixtures/uuv.json");
    /// Land vehicle in air at 70 mph, geometry read from STL.
    pub const LAND_VEHICLE: &str = include_str!("../fixtures/land_vehicle.json");
    /// Winged UAV in air at 50 m/s.
    pub const UAV: &str = include_str!("../fixtures/uav.json");

    pub const ALL: [(&str, &str); 3] = [("uuv", UUV), ("land_vehicle", LAND_VEHICLE), ("uav", UAV)];

    pub const MILE_M: f64 = 1609.344;

    pub fn mph_to_mps(mph: f64) -> f64 {
        mph * MILE_M / 3600.0
    }
}
