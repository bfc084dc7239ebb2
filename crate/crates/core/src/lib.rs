//! Coupled cyclist/vehicle in-the-loop co-simulation.
//!
//! An authoritative hub integrates a shuttle running a track-and-follow
//! controller and a cyclist (scripted or relayed from a console) at a fixed
//! tick rate, exchanging state over a little-endian UDP protocol. Offline
//! pipelines reconstruct trajectories with an EKF, measure injected channel
//! latencies and compare runs.
//!
//! The numeric kernels are generic over [`Real`]; the simulator, protocol
//! and logs run in `f64`. Aliases for both precisions are exported here.

// NaN-rejecting guards are written as `!(x > 0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod clock;
pub mod cyclist;
pub mod estimation;
pub mod geometry;
pub mod hub;
pub mod net;
pub mod num;
pub mod policy;
pub mod protocol;
pub mod scenario;
pub mod table1;
pub mod units;
pub mod vehicle;
pub mod world;

pub use clock::{Decimator, SimClock};
pub use geometry::{bearing_to, normalize_angle, pose_compose, Point2, Pose2};
pub use num::Real;
pub use world::{
    CyclistState, HandHeight, RiderInput, ScenarioPhase, VehicleCommand, VehicleState,
    WorldSnapshot,
};

pub type Pose2F64 = Pose2<f64>;
pub type Pose2F32 = Pose2<f32>;
pub type Point2F64 = Point2<f64>;
pub type Point2F32 = Point2<f32>;
pub type VehicleStateF32 = VehicleState<f32>;
pub type CyclistStateF32 = CyclistState<f32>;
pub type RiderInputF32 = RiderInput<f32>;
pub type VehicleParamsF64 = vehicle::VehicleParams<f64>;
pub type VehicleParamsF32 = vehicle::VehicleParams<f32>;
pub type TffConfigF64 = vehicle::TffConfig<f64>;
pub type TffConfigF32 = vehicle::TffConfig<f32>;
