//! Track-and-follow planning: gesture mode logic with hysteresis, PID gap
//! control producing a velocity command, and yaw-offset steering.

use serde::{Deserialize, Serialize};

use crate::num::Real;

use super::perception::Observation;
use super::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum TffMode {
    #[default]
    Inactive,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TffState<T = f64> {
    pub mode: TffMode,
    /// A raised hand is only taken as a command while armed; arming needs
    /// the hand seen below shoulder level.
    pub armed: bool,
    pub pid_integral: T,
    /// `None` until the first PID update after activation.
    pub pid_prev_error: Option<T>,
    pub target_valid: bool,
}

impl<T: Real> Default for TffState<T> {
    fn default() -> Self {
        Self {
            mode: TffMode::Inactive,
            armed: true,
            pid_integral: T::zero(),
            pid_prev_error: None,
            target_valid: false,
        }
    }
}

impl<T: Real> TffState<T> {
    fn with_pid_reset(self) -> Self {
        Self {
            pid_integral: T::zero(),
            pid_prev_error: None,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TffConfig<T = f64> {
    /// Desired gap to the cyclist, m.
    pub follow_distance: T,
    pub kp: T,
    pub ki: T,
    pub kd: T,
    /// Bound on the integral state, m*s.
    pub integral_clamp: T,
    pub steer_gain: T,
    /// How long the last velocity command is held after detection loss
    /// before ramping down, s.
    pub detection_hold: T,
}

impl<T: Real> Default for TffConfig<T> {
    fn default() -> Self {
        Self {
            follow_distance: T::lit(5.0),
            kp: T::lit(2.0),
            ki: T::lit(0.1),
            kd: T::lit(0.5),
            integral_clamp: T::lit(5.0),
            steer_gain: T::lit(1.2),
            detection_hold: T::lit(0.5),
        }
    }
}

impl<T: Real> TffConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.follow_distance > T::zero()) {
            return Err("follow_distance must be positive".into());
        }
        for (name, g) in [
            ("kp", self.kp),
            ("ki", self.ki),
            ("kd", self.kd),
            ("integral_clamp", self.integral_clamp),
            ("steer_gain", self.steer_gain),
            ("detection_hold", self.detection_hold),
        ] {
            if !(g >= T::zero()) {
                return Err(format!("{name} must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Applies one valid observation to the gesture state machine.
///
/// | mode     | armed | hand          | result                                  |
/// |----------|-------|---------------|-----------------------------------------|
/// | any      | no    | below shoulder| armed                                   |
/// | Inactive | yes   | above head    | Active, disarmed, PID memory cleared    |
/// | Active   | yes   | above head    | Inactive, disarmed, PID memory cleared  |
/// | otherwise|       |               | unchanged                               |
pub fn tff_update_mode<T: Real>(state: TffState<T>, obs: &Observation<T>) -> TffState<T> {
    if !obs.valid {
        return state;
    }
    match (state.mode, state.armed) {
        (_, false) if obs.hand_below_shoulder => TffState {
            armed: true,
            ..state
        },
        (TffMode::Inactive, true) if obs.hand_above_head => TffState {
            mode: TffMode::Active,
            armed: false,
            ..state.with_pid_reset()
        },
        (TffMode::Active, true) if obs.hand_above_head => TffState {
            mode: TffMode::Inactive,
            armed: false,
            ..state.with_pid_reset()
        },
        _ => state,
    }
}

/// PID on the gap error `|rel| - d_set`, producing a velocity command in
/// `[0, v_max]`. While inactive the command is zero and memory is cleared.
pub fn tff_longitudinal<T: Real>(
    state: TffState<T>,
    obs: &Observation<T>,
    cfg: &TffConfig<T>,
    v_max: T,
    dt: T,
) -> (T, TffState<T>) {
    if state.mode == TffMode::Inactive {
        return (T::zero(), state.with_pid_reset());
    }
    let e = obs.range() - cfg.follow_distance;
    let integral = (state.pid_integral + e * dt).clamp_to(-cfg.integral_clamp, cfg.integral_clamp);
    let prev = state.pid_prev_error.unwrap_or(e);
    let derivative = if dt > T::zero() {
        (e - prev) / dt
    } else {
        T::zero()
    };
    let v_cmd = (cfg.kp * e + cfg.ki * integral + cfg.kd * derivative).clamp_to(T::zero(), v_max);
    (
        v_cmd,
        TffState {
            pid_integral: integral,
            pid_prev_error: Some(e),
            ..state
        },
    )
}

/// Steering proportional to the target's bearing in the vehicle frame.
pub fn tff_lateral<T: Real>(
    obs: &Observation<T>,
    cfg: &TffConfig<T>,
    params: &VehicleParams<T>,
) -> T {
    let rel = obs.relative_position;
    let bearing = rel.y.atan2(rel.x);
    (cfg.steer_gain * bearing).clamp_to(-params.steer_limit, params.steer_limit)
}
