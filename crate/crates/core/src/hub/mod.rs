//! The authoritative world server: fixed-tick integration of both entities,
//! hold-last-value input handling, snapshot broadcast and ground-truth logs.

mod lockstep;
mod log;
mod realtime;

pub use self::log::{config_hash, CycRow, LogError, LogMeta, LogRow, TrajectoryLog, VehRow};
pub use lockstep::{run_lockstep, LockstepHub};
pub use realtime::{run_realtime, ExitReport, HubControl, RealtimeError, RealtimeHub};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::clock::DEFAULT_TICK_RATE;
use crate::cyclist::{cyclist_step, CyclistParams};
use crate::protocol::{ChannelCondition, DEFAULT_HUB_PORT};
use crate::units::{self, UnitsError};
use crate::vehicle::{vehicle_dynamics_step, VehicleParams};
use crate::world::{HandHeight, RiderInput, ScenarioPhase, VehicleCommand, WorldSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HubMode {
    Realtime,
    #[default]
    Lockstep,
}

impl std::str::FromStr for HubMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "realtime" => Ok(Self::Realtime),
            "lockstep" => Ok(Self::Lockstep),
            other => Err(format!("unknown hub mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HubConfig {
    pub tick_rate: u32,
    pub snapshot_rate: u32,
    pub mode: HubMode,
    pub log_path: Option<PathBuf>,
    pub seed: u64,
    pub port: u16,
    /// Deadline-miss rate above which a realtime run is flagged.
    pub deadline_miss_threshold: f64,
    /// Wall seconds per simulated second in realtime mode.
    pub time_scale: f64,
    /// Transport applied to agent inputs in lockstep mode.
    pub input_channel: ChannelCondition,
    pub vehicle: VehicleParams,
    pub cyclist: CyclistParams,
}

impl Default for HubConfig {
    fn default() -> Self {
        Self {
            tick_rate: DEFAULT_TICK_RATE,
            snapshot_rate: DEFAULT_TICK_RATE,
            mode: HubMode::Lockstep,
            log_path: None,
            seed: 0,
            port: DEFAULT_HUB_PORT,
            deadline_miss_threshold: 0.01,
            time_scale: 1.0,
            input_channel: ChannelCondition::ideal(),
            vehicle: VehicleParams::default(),
            cyclist: CyclistParams::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid hub config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HubConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.tick_rate == 0 {
            return bad("tick_rate must be positive");
        }
        if self.snapshot_rate == 0 || self.snapshot_rate > self.tick_rate {
            return bad("snapshot_rate must be in 1..=tick_rate");
        }
        if !(self.time_scale > 0.0) {
            return bad("time_scale must be positive");
        }
        if !(0.0..=1.0).contains(&self.deadline_miss_threshold) {
            return bad("deadline_miss_threshold must be in [0, 1]");
        }
        self.input_channel
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.vehicle.validate().map_err(ConfigError::Invalid)?;
        self.cyclist.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = units::from_json_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.tick_rate as f64
    }
}

/// Advances the world by one tick with the latest accepted inputs.
///
/// The phase moves from `PreStart` to `Running` on the first raised hand;
/// `end` marks the produced snapshot `Ended`.
pub fn hub_step(
    world: &WorldSnapshot,
    vehicle_input: &VehicleCommand,
    rider_input: &RiderInput,
    vehicle: &VehicleParams,
    cyclist: &CyclistParams,
    end: bool,
) -> WorldSnapshot {
    let dt = world.clock.dt();
    let next_vehicle = vehicle_dynamics_step(
        &world.vehicle,
        vehicle_input.accel_cmd,
        vehicle_input.steer_cmd,
        vehicle,
        dt,
    );
    let next_cyclist = cyclist_step(&world.cyclist, rider_input, cyclist, dt);
    let scenario_phase = match world.scenario_phase {
        _ if end => ScenarioPhase::Ended,
        ScenarioPhase::PreStart if next_cyclist.hand_height == HandHeight::AboveHead => {
            ScenarioPhase::Running
        }
        phase => phase,
    };
    WorldSnapshot {
        clock: world.clock.advanced(),
        vehicle: next_vehicle,
        cyclist: next_cyclist,
        scenario_phase,
    }
}
