use crate::geometry::Pose2;
use crate::num::Real;
use crate::world::VehicleState;

use super::VehicleParams;

/// Advances the kinematic bicycle by one explicit Euler step.
///
/// The pose integrates with the speed and wheel angle held at the start of
/// the step; afterwards the speed takes the commanded acceleration (clamped
/// to `[0, v_max]`) and the wheel moves to `steer_angle` (clamped to the
/// steering limit).
pub fn vehicle_dynamics_step<T: Real>(
    state: &VehicleState<T>,
    accel_cmd: T,
    steer_angle: T,
    params: &VehicleParams<T>,
    dt: T,
) -> VehicleState<T> {
    let v = state.speed;
    let psi = state.pose.heading;
    let pose = Pose2::new(
        state.pose.x + v * psi.cos() * dt,
        state.pose.y + v * psi.sin() * dt,
        psi + v * state.steer_angle.tan() / params.wheelbase * dt,
    );
    VehicleState {
        pose,
        speed: (v + accel_cmd * dt).clamp_to(T::zero(), params.v_max),
        steer_angle: steer_angle.clamp_to(-params.steer_limit, params.steer_limit),
        accel_cmd,
        steer_cmd: steer_angle,
    }
}
