use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::world::{VehicleCommand, VehicleState};

use super::VehicleParams;

/// Safety-operator intervention. When present it replaces the controller
/// output entirely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Override<T = f64> {
    /// Maximum deceleration to standstill, wheel held where it is.
    FullStop,
    Manual(VehicleCommand<T>),
}

/// Converts a velocity/steering request into actuator commands.
///
/// Acceleration follows a first-order response toward `v_cmd` bounded by
/// the accel/decel limits; the wheel slews toward the target at no more
/// than `steer_rate_limit` and stays within `steer_limit`.
pub fn act<T: Real>(
    v_cmd: T,
    steer_cmd: T,
    current: &VehicleState<T>,
    params: &VehicleParams<T>,
    override_cmd: Option<&Override<T>>,
    dt: T,
) -> VehicleCommand<T> {
    assert!(dt > T::zero(), "dt must be positive");
    let (accel, steer_target) = match override_cmd {
        None => ((v_cmd - current.speed) / params.response_time, steer_cmd),
        Some(Override::FullStop) => {
            let a = if current.speed > T::zero() {
                -params.decel_limit
            } else {
                T::zero()
            };
            (a, current.steer_angle)
        }
        Some(Override::Manual(cmd)) => (cmd.accel_cmd, cmd.steer_cmd),
    };
    let accel = accel.clamp_to(-params.decel_limit, params.accel_limit);
    let max_step = params.steer_rate_limit * dt;
    let step = (steer_target - current.steer_angle).clamp_to(-max_step, max_step);
    let steer = (current.steer_angle + step).clamp_to(-params.steer_limit, params.steer_limit);
    VehicleCommand {
        accel_cmd: accel,
        steer_cmd: steer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const DT: f64 = 1.0 / 90.0;

    fn moving(speed: f64, steer: f64) -> VehicleState {
        VehicleState {
            speed,
            steer_angle: steer,
            ..VehicleState::at_rest(Pose2::new(0.0, 0.0, 0.0))
        }
    }

    #[test]
    fn equilibrium() {
        let p = VehicleParams::default();
        let c = act(1.2, 0.1, &moving(1.2, 0.1), &p, None, DT);
        assert_eq!(c.accel_cmd, 0.0);
        assert_eq!(c.steer_cmd, 0.1);
    }

    #[test]
    fn full_stop_override_wins() {
        let p = VehicleParams::default();
        let c = act(
            3.0,
            0.5,
            &moving(2.0, 0.1),
            &p,
            Some(&Override::FullStop),
            DT,
        );
        assert_eq!(c.accel_cmd, -p.decel_limit);
        assert_eq!(c.steer_cmd, 0.1);
        let c = act(
            3.0,
            0.5,
            &moving(0.0, 0.1),
            &p,
            Some(&Override::FullStop),
            DT,
        );
        assert_eq!(c.accel_cmd, 0.0);
    }

    #[test]
    fn steering_slew() {
        let p = VehicleParams::default();
        let c = act(0.0, 0.6, &moving(0.0, 0.0), &p, None, DT);
        assert_abs_diff_eq!(c.steer_cmd, 0.7 / 90.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.steer_cmd, 0.00778, epsilon = 1e-5);
    }

    proptest! {
        #[test]
        fn outputs_within_limits(
            v_cmd in -10.0f64..10.0,
            steer in -3.0f64..3.0,
            speed in 0.0f64..3.0,
            cur in -0.6f64..0.6,
            manual in prop::option::of((-10.0f64..10.0, -3.0f64..3.0)),
        ) {
            let p = VehicleParams::default();
            let ov = manual.map(|(a, s)| Override::Manual(VehicleCommand { accel_cmd: a, steer_cmd: s }));
            let c = act(v_cmd, steer, &moving(speed, cur), &p, ov.as_ref(), DT);
            prop_assert!(c.accel_cmd >= -p.decel_limit && c.accel_cmd <= p.accel_limit);
            prop_assert!(c.steer_cmd.abs() <= p.steer_limit);
            prop_assert!((c.steer_cmd - cur).abs() <= p.steer_rate_limit * DT + 1e-12);
        }
    }
}
