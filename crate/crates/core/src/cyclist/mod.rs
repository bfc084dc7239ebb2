//! The cyclist bench in software: rider inputs to bicycle motion against
//! virtual driving resistances, trainer torque, and a scripted rider.

mod physics;
mod rider;

pub use physics::{
    cyclist_kinematics_step, cyclist_longitudinal_step, cyclist_step, resistance_force,
    steady_state_lean, trainer_torque, REST_SPEED,
};
pub use rider::{pure_pursuit_steer, RiderError, RiderGains, ScriptedRider};

use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::world::DEFAULT_LEAN_LIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CyclistParams<T = f64> {
    /// Rider plus bicycle, kg.
    pub mass: T,
    pub gravity: T,
    pub rolling_coefficient: T,
    /// Drag area, m^2.
    pub drag_area: T,
    pub air_density: T,
    /// Road grade, rad (positive uphill).
    pub grade: T,
    pub wheel_radius: T,
    /// Speed floor for the power-to-force conversion, m/s.
    pub v_eps: T,
    /// Force per fully pulled lever, N.
    pub max_brake_force: T,
    pub lean_limit: T,
    pub wheelbase: T,
}

impl<T: Real> Default for CyclistParams<T> {
    fn default() -> Self {
        Self {
            mass: T::lit(90.0),
            gravity: T::lit(9.81),
            rolling_coefficient: T::lit(0.005),
            drag_area: T::lit(0.5),
            air_density: T::lit(1.225),
            grade: T::zero(),
            wheel_radius: T::lit(0.335),
            v_eps: T::lit(0.2),
            max_brake_force: T::lit(250.0),
            lean_limit: T::lit(DEFAULT_LEAN_LIMIT),
            wheelbase: T::lit(1.1),
        }
    }
}

impl<T: Real> CyclistParams<T> {
    /// All resistances off.
    pub fn frictionless() -> Self {
        Self {
            rolling_coefficient: T::zero(),
            drag_area: T::zero(),
            grade: T::zero(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("mass", self.mass),
            ("wheel_radius", self.wheel_radius),
            ("v_eps", self.v_eps),
            ("wheelbase", self.wheelbase),
        ] {
            if !(v > T::zero()) {
                return Err(format!("cyclist parameter `{name}` must be positive"));
            }
        }
        for (name, v) in [
            ("rolling_coefficient", self.rolling_coefficient),
            ("drag_area", self.drag_area),
            ("air_density", self.air_density),
            ("max_brake_force", self.max_brake_force),
            ("lean_limit", self.lean_limit),
        ] {
            if !(v >= T::zero()) {
                return Err(format!("cyclist parameter `{name}` must be non-negative"));
            }
        }
        Ok(())
    }
}
