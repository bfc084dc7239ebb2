//! Entity state and the per-tick world snapshot.

use serde::{Deserialize, Serialize};

use crate::clock::SimClock;
use crate::geometry::Pose2;
use crate::num::Real;

/// Default lateral tilt limit of the bench platform, 7 degrees.
pub const DEFAULT_LEAN_LIMIT: f64 = 0.1222;

/// Discrete hand position of the cyclist, standing in for wrist tracking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandHeight {
    #[serde(rename = "above")]
    AboveHead,
    #[default]
    Between,
    #[serde(rename = "below")]
    BelowShoulder,
}

impl HandHeight {
    pub const ALL: [HandHeight; 3] = [Self::AboveHead, Self::Between, Self::BelowShoulder];

    pub fn to_wire(self) -> u8 {
        match self {
            Self::AboveHead => 1,
            Self::Between => 2,
            Self::BelowShoulder => 3,
        }
    }

    pub fn from_wire(b: u8) -> Option<Self> {
        match b {
            1 => Some(Self::AboveHead),
            2 => Some(Self::Between),
            3 => Some(Self::BelowShoulder),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::AboveHead => "above",
            Self::Between => "between",
            Self::BelowShoulder => "below",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ScenarioPhase {
    #[default]
    PreStart,
    Running,
    Ended,
}

impl ScenarioPhase {
    pub fn to_wire(self) -> u8 {
        match self {
            Self::PreStart => 1,
            Self::Running => 2,
            Self::Ended => 3,
        }
    }

    pub fn from_wire(b: u8) -> Option<Self> {
        match b {
            1 => Some(Self::PreStart),
            2 => Some(Self::Running),
            3 => Some(Self::Ended),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState<T = f64> {
    pub pose: Pose2<T>,
    pub speed: T,
    /// Actual road-wheel angle, in effect until the next tick.
    pub steer_angle: T,
    pub accel_cmd: T,
    pub steer_cmd: T,
}

impl<T: Real> VehicleState<T> {
    pub fn at_rest(pose: Pose2<T>) -> Self {
        Self {
            pose,
            speed: T::zero(),
            steer_angle: T::zero(),
            accel_cmd: T::zero(),
            steer_cmd: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CyclistState<T = f64> {
    pub pose: Pose2<T>,
    pub speed: T,
    pub lean: T,
    pub steer_angle: T,
    pub hand_height: HandHeight,
    pub pedal_power: T,
    pub brake_force_front: T,
    pub brake_force_rear: T,
}

impl<T: Real> CyclistState<T> {
    pub fn at_rest(pose: Pose2<T>) -> Self {
        Self {
            pose,
            speed: T::zero(),
            lean: T::zero(),
            steer_angle: T::zero(),
            hand_height: HandHeight::Between,
            pedal_power: T::zero(),
            brake_force_front: T::zero(),
            brake_force_rear: T::zero(),
        }
    }
}

/// One frame of rider commands as sensed on the cyclist bench.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RiderInput<T = f64> {
    pub pedal_power: T,
    /// Lever fraction in `[0, 1]`.
    pub brake_front: T,
    /// Lever fraction in `[0, 1]`.
    pub brake_rear: T,
    pub steer_angle: T,
    pub lean: T,
    pub hand_height: HandHeight,
}

impl<T: Real> RiderInput<T> {
    /// Clamps every channel into its valid range.
    pub fn sanitized(&self, lean_limit: T) -> Self {
        let z = T::zero();
        let one = T::one();
        Self {
            pedal_power: self.pedal_power.max(z),
            brake_front: self.brake_front.clamp_to(z, one),
            brake_rear: self.brake_rear.clamp_to(z, one),
            steer_angle: self.steer_angle,
            lean: self.lean.clamp_to(-lean_limit, lean_limit),
            hand_height: self.hand_height,
        }
    }
}

/// Actuator command sent by the vehicle agent: longitudinal acceleration
/// and the rate-limited road-wheel angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleCommand<T = f64> {
    pub accel_cmd: T,
    pub steer_cmd: T,
}

/// Authoritative state of the shared world at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub clock: SimClock,
    pub vehicle: VehicleState,
    pub cyclist: CyclistState,
    pub scenario_phase: ScenarioPhase,
}

impl WorldSnapshot {
    pub fn new(clock: SimClock, vehicle: VehicleState, cyclist: CyclistState) -> Self {
        Self {
            clock,
            vehicle,
            cyclist,
            scenario_phase: ScenarioPhase::PreStart,
        }
    }

    pub fn tick(&self) -> u32 {
        self.clock.tick
    }

    pub fn time(&self) -> f64 {
        self.clock.elapsed()
    }

    /// Euclidean distance between the two entities.
    pub fn gap(&self) -> f64 {
        self.vehicle
            .pose
            .position()
            .distance(&self.cyclist.pose.position())
    }
}
