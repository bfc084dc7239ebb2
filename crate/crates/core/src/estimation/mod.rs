//! Offline estimation: simulated onboard sensors, an EKF on the kinematic
//! bicycle, and cyclist track reconstruction from relative observations.

mod ekf;
mod reconstruct;
mod sensors;

use thiserror::Error;

pub use ekf::{
    ekf_predict, ekf_update, ekf_update_with_nis, motion_jacobian, motion_model, symmetrize,
    EkfEstimate, Mat4, Measurement, Updated,
};
pub use reconstruct::{
    cyclist_global_track, estimates_to_jsonl, initial_estimate, position_rmse,
    reconstruct_smoothed, reconstruct_trajectory, reconstruct_with_diagnostics, CyclistFix,
    EstimateRow, FilterParams, NisSample, ProcessNoise, Reconstruction, HEADING_BASELINE,
    HEADING_BASELINE_SIGMAS, MIN_VARIANCE, P0,
};
pub use sensors::{
    simulate_relative_observations, simulate_sensors, GnssConfig, ImuConfig, RelativeConfig,
    RelativeObservation, SensorReading, SensorSample, SensorSuiteConfig, SteerConfig, WheelConfig,
};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("innovation covariance is not invertible at tick {tick}")]
    SingularInnovation { tick: u32 },
    #[error("predicted covariance is singular at tick {tick}")]
    SingularCovariance { tick: u32 },
    #[error("no raised hand in the observations")]
    NoGestureFound,
    #[error("no GNSS fix in the sensor stream")]
    NoFix,
    #[error("log is empty")]
    EmptyLog,
    #[error("invalid sensor configuration: {0}")]
    InvalidConfig(String),
}
