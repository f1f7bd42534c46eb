use serde::{Deserialize, Serialize};

use crate::config::FluidSpec;

use super::FlowError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConditions {
    /// m/s along +x.
    pub inlet_speed: f64,
    /// kg/m^3
    pub density: f64,
    /// m^2/s
    pub kinematic_viscosity: f64,
    pub turbulence_intensity: f64,
}

impl FlowConditions {
    pub fn new(inlet_speed: f64, density: f64, kinematic_viscosity: f64, turbulence_intensity: f64) -> Result<Self, FlowError> {
        let c = FlowConditions { inlet_speed, density, kinematic_viscosity, turbulence_intensity };
        for (name, v) in [
            ("inlet_speed", inlet_speed),
            ("density", density),
            ("kinematic_viscosity", kinematic_viscosity),
            ("turbulence_intensity", turbulence_intensity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(FlowError::InvalidConditions(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(c)
    }

    pub fn from_fluid(f: &FluidSpec) -> Result<Self, FlowError> {
        Self::new(f.inlet_speed, f.density, f.kinematic_viscosity(), f.turbulence_intensity)
    }

    pub fn reynolds(&self, length: f64) -> f64 {
        self.inlet_speed * length / self.kinematic_viscosity
    }

    /// Dynamic pressure 0.5 rho U^2 (Pa).
    pub fn dynamic_pressure(&self) -> f64 {
        0.5 * self.density * self.inlet_speed * self.inlet_speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceIc {
    /// m^2/s^2
    pub k: f64,
    /// 1/s
    pub omega: f64,
    pub c_mu: f64,
    /// m
    pub length_scale: f64,
}

pub const DEFAULT_C_MU: f64 = 0.09;

/// k = 1.5 (U I)^2 and omega = sqrt(k) / (c_mu^(1/4) L).
pub fn compute_turbulence_ic(cond: &FlowConditions, length_scale: f64, c_mu: f64) -> TurbulenceIc {
    debug_assert!(length_scale > 0.0 && c_mu > 0.0);
    let ui = cond.inlet_speed * cond.turbulence_intensity;
    let k = 1.5 * ui * ui;
    let omega = k.sqrt() / (c_mu.powf(0.25) * length_scale);
    TurbulenceIc { k, omega, c_mu, length_scale }
}
