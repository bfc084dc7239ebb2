//! The automated shuttle: plant model, emulated perception, the
//! track-and-follow controller and the drive-by-wire actuation layer.

mod actuation;
mod agent;
mod dynamics;
mod perception;
mod tff;

pub use actuation::{act, Override};
pub use agent::{mode_switches, ControllerTraceRow, VehicleAgent, VehicleAgentConfig};
pub use dynamics::vehicle_dynamics_step;
pub use perception::{select_target, sense, Observation, Perception, PerceptionConfig};
pub use tff::{tff_lateral, tff_longitudinal, tff_update_mode, TffConfig, TffMode, TffState};

use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Shuttle geometry and actuator limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams<T = f64> {
    pub wheelbase: T,
    pub steer_limit: T,
    /// rad/s
    pub steer_rate_limit: T,
    /// m/s^2
    pub accel_limit: T,
    /// m/s^2, positive number
    pub decel_limit: T,
    pub v_max: T,
    /// First-order time constant converting a velocity command into an
    /// acceleration command.
    pub response_time: T,
}

impl<T: Real> Default for VehicleParams<T> {
    fn default() -> Self {
        Self {
            wheelbase: T::lit(2.8),
            steer_limit: T::lit(0.6),
            steer_rate_limit: T::lit(0.7),
            accel_limit: T::lit(1.0),
            decel_limit: T::lit(2.0),
            v_max: T::lit(3.0),
            response_time: T::lit(0.5),
        }
    }
}

impl<T: Real> VehicleParams<T> {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("wheelbase", self.wheelbase),
            ("steer_limit", self.steer_limit),
            ("steer_rate_limit", self.steer_rate_limit),
            ("accel_limit", self.accel_limit),
            ("decel_limit", self.decel_limit),
            ("v_max", self.v_max),
            ("response_time", self.response_time),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(format!("vehicle parameter `{name}` must be positive"));
            }
        }
        Ok(())
    }
}
