//! Repeated closed-loop trials of a maneuver, in lockstep or over loopback.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::thread;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cyclist::{RiderGains, ScriptedRider};
use crate::hub::{
    config_hash, HubConfig, HubControl, HubMode, LockstepHub, LogError, RealtimeError, RealtimeHub,
    TrajectoryLog,
};
use crate::net::{run_scripted_cyclist_client, run_vehicle_client, ClientConfig};
use crate::protocol::{ChannelCondition, ChannelError, ClientRole};
use crate::vehicle::{ControllerTraceRow, TffMode, VehicleAgent, VehicleAgentConfig};
use crate::world::{CyclistState, VehicleState, WorldSnapshot};
use crate::SimClock;

use super::script::{ManeuverScript, ScriptError};

pub const DEFAULT_TRIAL_TIMEOUT: f64 = 600.0;
/// Vehicle speed below which a trial may end, m/s.
pub const STANDSTILL_SPEED: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TrialError {
    #[error("a trial plan needs at least one repetition")]
    NoRepetitions,
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Realtime(#[from] RealtimeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn default_repetitions() -> u32 {
    2
}

fn default_timeout() -> f64 {
    DEFAULT_TRIAL_TIMEOUT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub script: ManeuverScript,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub mode: HubMode,
    #[serde(default)]
    pub channel: ChannelCondition,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub hub: HubConfig,
    #[serde(default)]
    pub vehicle: VehicleAgentConfig,
    #[serde(default)]
    pub rider: RiderGains,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl TrialPlan {
    pub fn new(script: ManeuverScript) -> Self {
        Self {
            script,
            repetitions: default_repetitions(),
            mode: HubMode::Lockstep,
            channel: ChannelCondition::ideal(),
            seed: 0,
            timeout: DEFAULT_TRIAL_TIMEOUT,
            hub: HubConfig::default(),
            vehicle: VehicleAgentConfig::default(),
            rider: RiderGains::default(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), TrialError> {
        if self.repetitions == 0 {
            return Err(TrialError::NoRepetitions);
        }
        if !(self.timeout > 0.0) {
            return Err(TrialError::Config("timeout must be positive".into()));
        }
        self.script.validate()?;
        self.channel.validate()?;
        self.hub
            .validate()
            .map_err(|e| TrialError::Config(e.to_string()))?;
        self.vehicle.params.validate().map_err(TrialError::Config)?;
        self.vehicle.tff.validate().map_err(TrialError::Config)?;
        Ok(())
    }

    fn hub_config(&self, seed: u64) -> HubConfig {
        HubConfig {
            mode: self.mode,
            seed,
            input_channel: self.channel,
            log_path: None,
            ..self.hub.clone()
        }
    }

    fn agent_config(&self, seed: u64) -> VehicleAgentConfig {
        let mut cfg = self.vehicle;
        cfg.params = self.hub.vehicle;
        cfg.perception.seed = seed;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrialOutcome {
    Completed,
    TimedOut,
    RiderFailed(String),
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub repetition: u32,
    pub seed: u64,
    pub outcome: TrialOutcome,
    pub log: TrajectoryLog,
    pub trace: Vec<ControllerTraceRow>,
    pub log_path: Option<PathBuf>,
}

pub fn initial_world(script: &ManeuverScript, tick_rate: u32) -> WorldSnapshot {
    WorldSnapshot::new(
        SimClock::new(tick_rate),
        VehicleState::at_rest(script.start_pose_vehicle),
        CyclistState::at_rest(script.start_pose_cyclist),
    )
}

#[derive(Serialize)]
struct HashedConfig<'a> {
    script: &'a ManeuverScript,
    hub: &'a HubConfig,
    vehicle: &'a VehicleAgentConfig,
    rider: &'a RiderGains,
    timeout: f64,
}

/// Runs one repetition. Rider failures and timeouts are reported in the
/// result, not as errors.
pub fn run_trial(plan: &TrialPlan, repetition: u32) -> Result<TrialResult, TrialError> {
    plan.validate()?;
    let seed = plan.seed.wrapping_add(repetition as u64);
    let hub_cfg = plan.hub_config(seed);
    let agent_cfg = plan.agent_config(seed);
    let mut agent = VehicleAgent::new(agent_cfg, hub_cfg.tick_rate)?;
    let mut rider = ScriptedRider::new(&plan.script, hub_cfg.cyclist, plan.rider)?;
    let initial = initial_world(&plan.script, hub_cfg.tick_rate);
    let max_ticks = (plan.timeout * hub_cfg.tick_rate as f64).round() as u32;

    let (mut log, outcome) = match plan.mode {
        HubMode::Lockstep => {
            run_lockstep_trial(&hub_cfg, initial, &mut agent, &mut rider, max_ticks)?
        }
        HubMode::Realtime => {
            run_realtime_trial(&hub_cfg, initial, &mut agent, &mut rider, max_ticks)?
        }
    };
    log.meta.script = plan.script.name.clone();
    log.meta.seed = seed;
    log.meta.mode = match plan.mode {
        HubMode::Lockstep => "lockstep".into(),
        HubMode::Realtime => "realtime".into(),
    };
    log.meta.config_hash = config_hash(&HashedConfig {
        script: &plan.script,
        hub: &hub_cfg,
        vehicle: &agent_cfg,
        rider: &plan.rider,
        timeout: plan.timeout,
    });
    log.meta.tick_rate = hub_cfg.tick_rate;
    log.meta.timed_out = outcome == TrialOutcome::TimedOut;
    log.meta.note = match &outcome {
        TrialOutcome::Completed => None,
        TrialOutcome::TimedOut => Some(format!("TrialTimeout after {} s", plan.timeout)),
        TrialOutcome::RiderFailed(e) => Some(e.clone()),
    };
    if outcome != TrialOutcome::Completed {
        warn!(
            "{} repetition {repetition}: {:?}",
            plan.script.name, outcome
        );
    }

    let trace = agent.take_trace();
    let log_path = match &plan.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let stem = format!(
                "{}_{}_rep{repetition}_seed{seed}",
                plan.script.name, log.meta.mode
            );
            let path = dir.join(format!("{stem}.jsonl"));
            log.write(&path)?;
            let mut text = String::new();
            for row in &trace {
                text.push_str(&serde_json::to_string(row).expect("trace rows serialize"));
                text.push('\n');
            }
            std::fs::write(dir.join(format!("{stem}.trace.jsonl")), text)?;
            info!("wrote {}", path.display());
            Some(path)
        }
        None => None,
    };
    Ok(TrialResult {
        repetition,
        seed,
        outcome,
        log,
        trace,
        log_path,
    })
}

fn run_lockstep_trial(
    cfg: &HubConfig,
    initial: WorldSnapshot,
    agent: &mut VehicleAgent,
    rider: &mut ScriptedRider,
    max_ticks: u32,
) -> Result<(TrajectoryLog, TrialOutcome), TrialError> {
    let mut hub = LockstepHub::new(cfg.clone(), initial)?;
    let mut outcome = TrialOutcome::TimedOut;
    while hub.world().tick() < max_ticks {
        hub.tick(agent, rider);
        if hub.is_ended() {
            outcome = TrialOutcome::Completed;
            break;
        }
        if let Some(e) = rider.error() {
            outcome = TrialOutcome::RiderFailed(e.to_string());
            hub.request_end();
            hub.advance();
            break;
        }
        if rider.finished()
            && agent.tff_state().mode == TffMode::Inactive
            && hub.world().vehicle.speed < STANDSTILL_SPEED
        {
            hub.request_end();
        }
    }
    let meta = hub.default_meta("");
    Ok((hub.into_log(meta), outcome))
}

fn run_realtime_trial(
    cfg: &HubConfig,
    initial: WorldSnapshot,
    agent: &mut VehicleAgent,
    rider: &mut ScriptedRider,
    max_ticks: u32,
) -> Result<(TrajectoryLog, TrialOutcome), TrialError> {
    let hub = RealtimeHub::bind_addr(cfg.clone(), SocketAddr::from(([127, 0, 0, 1], 0)))?;
    let addr = hub.local_addr()?;
    let control = HubControl::new();
    let rider_ref = &mut *rider;
    let agent_ref = &mut *agent;
    let (log, report) = thread::scope(|s| {
        let hub_thread = s.spawn(|| hub.run(initial, Some(max_ticks), control.clone()));
        let vehicle = ClientConfig {
            tick_rate: cfg.tick_rate,
            ..ClientConfig::new(addr, 1, ClientRole::VehicleAgent)
        };
        let cyclist = ClientConfig {
            tick_rate: cfg.tick_rate,
            ..ClientConfig::new(addr, 2, ClientRole::CyclistAgent)
        };
        let v = s.spawn(move || run_vehicle_client(&vehicle, agent_ref));
        let c = s.spawn(move || run_scripted_cyclist_client(&cyclist, rider_ref));
        let c_report = c.join().expect("cyclist thread");
        if c_report.is_err() {
            control.request_stop();
        }
        let result = hub_thread.join().expect("hub thread");
        let _ = v.join().expect("vehicle thread");
        result
    })?;
    if report.deadline_miss_rate_exceeded {
        warn!("realtime trial missed {} deadlines", report.deadline_misses);
    }
    let outcome = if let Some(e) = rider.error() {
        TrialOutcome::RiderFailed(e.to_string())
    } else if log.meta.timed_out {
        TrialOutcome::TimedOut
    } else {
        TrialOutcome::Completed
    };
    Ok((log, outcome))
}

/// Runs every repetition with seeds `seed, seed + 1, ...`.
pub fn run_trials(plan: &TrialPlan) -> Result<Vec<TrialResult>, TrialError> {
    plan.validate()?;
    (0..plan.repetitions).map(|i| run_trial(plan, i)).collect()
}
