use crate::geometry::Pose2;
use crate::num::Real;
use crate::world::{CyclistState, RiderInput};

use super::CyclistParams;

/// Below this speed the bicycle counts as standing still.
pub const REST_SPEED: f64 = 1e-6;

/// Grade, rolling and aerodynamic resistance at speed `v`, N.
pub fn resistance_force<T: Real>(v: T, p: &CyclistParams<T>) -> T {
    let weight = p.mass * p.gravity;
    weight * p.grade.sin()
        + p.rolling_coefficient * weight * p.grade.cos()
        + T::half() * p.air_density * p.drag_area * v * v
}

/// Torque the trainer must apply at the wheel, N*m.
pub fn trainer_torque<T: Real>(v: T, p: &CyclistParams<T>) -> T {
    resistance_force(v, p) * p.wheel_radius
}

/// New speed after one step of pedalling, braking and resistance.
///
/// Propulsion is `P / max(v, v_eps)`. A bicycle at rest whose propulsion
/// cannot overcome resistance stays at rest.
pub fn cyclist_longitudinal_step<T: Real>(
    state: &CyclistState<T>,
    input: &RiderInput<T>,
    p: &CyclistParams<T>,
    dt: T,
) -> T {
    let v = state.speed;
    let input = input.sanitized(p.lean_limit);
    let f_prop = input.pedal_power / v.max(p.v_eps);
    let f_res = resistance_force(v, p);
    if v < T::lit(REST_SPEED) && f_prop <= f_res {
        return T::zero();
    }
    let f_brake = (input.brake_front + input.brake_rear) * p.max_brake_force;
    (v + dt * (f_prop - f_res - f_brake) / p.mass).max(T::zero())
}

/// Planar kinematic bicycle, integrated with the speed and handlebar angle
/// held at the start of the step.
pub fn cyclist_kinematics_step<T: Real>(state: &CyclistState<T>, wheelbase: T, dt: T) -> Pose2<T> {
    let v = state.speed;
    let psi = state.pose.heading;
    Pose2::new(
        state.pose.x + v * psi.cos() * dt,
        state.pose.y + v * psi.sin() * dt,
        psi + v * state.steer_angle.tan() / wheelbase * dt,
    )
}

/// Lean angle of a steady turn at speed `v` and handlebar angle `steer`.
pub fn steady_state_lean<T: Real>(v: T, steer: T, wheelbase: T, gravity: T) -> T {
    (v * v * steer.tan() / (wheelbase * gravity)).atan()
}

/// Full cyclist update: pose and speed from the current state, then the
/// sensed channels (handlebar, lean, hand, power, brake forces) taken over
/// from the input for the next tick.
pub fn cyclist_step<T: Real>(
    state: &CyclistState<T>,
    input: &RiderInput<T>,
    p: &CyclistParams<T>,
    dt: T,
) -> CyclistState<T> {
    let input = input.sanitized(p.lean_limit);
    CyclistState {
        pose: cyclist_kinematics_step(state, p.wheelbase, dt),
        speed: cyclist_longitudinal_step(state, &input, p, dt),
        lean: input.lean,
        steer_angle: input.steer_angle,
        hand_height: input.hand_height,
        pedal_power: input.pedal_power,
        brake_force_front: input.brake_front * p.max_brake_force,
        brake_force_rear: input.brake_rear * p.max_brake_force,
    }
}
