//! The vehicle's sense-plan-act loop as a snapshot-driven policy.

use serde::{Deserialize, Serialize};

use crate::policy::VehiclePolicy;
use crate::protocol::ChannelError;
use crate::world::{VehicleCommand, WorldSnapshot};

use super::actuation::{act, Override};
use super::perception::{Perception, PerceptionConfig};
use super::tff::{tff_lateral, tff_longitudinal, tff_update_mode, TffConfig, TffMode, TffState};
use super::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleAgentConfig {
    pub params: VehicleParams,
    pub tff: TffConfig,
    pub perception: PerceptionConfig,
    /// Simulated safety-operator full stop from this time on, s.
    pub override_stop_at: Option<f64>,
}

/// One controller trace line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerTraceRow {
    pub tick: u32,
    pub mode: TffMode,
    pub armed: bool,
    pub e: f64,
    pub v_cmd: f64,
    pub steer_cmd: f64,
}

#[derive(Debug)]
pub struct VehicleAgent {
    cfg: VehicleAgentConfig,
    perception: Perception,
    tick_rate: u32,
    state: TffState,
    v_cmd: f64,
    steer_target: f64,
    last_error: f64,
    last_obs_tick: Option<u32>,
    last_valid_time: Option<f64>,
    trace: Vec<ControllerTraceRow>,
}

impl VehicleAgent {
    pub fn new(cfg: VehicleAgentConfig, tick_rate: u32) -> Result<Self, ChannelError> {
        Ok(Self {
            perception: Perception::new(cfg.perception, tick_rate)?,
            cfg,
            tick_rate,
            state: TffState::default(),
            v_cmd: 0.0,
            steer_target: 0.0,
            last_error: 0.0,
            last_obs_tick: None,
            last_valid_time: None,
            trace: Vec::new(),
        })
    }

    pub fn config(&self) -> &VehicleAgentConfig {
        &self.cfg
    }

    pub fn tff_state(&self) -> &TffState {
        &self.state
    }

    pub fn trace(&self) -> &[ControllerTraceRow] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<ControllerTraceRow> {
        std::mem::take(&mut self.trace)
    }

    /// Runs one control cycle on the given snapshot.
    pub fn step(&mut self, world: &WorldSnapshot) -> VehicleCommand {
        let now = world.time();
        let dt = world.clock.dt();
        let params = &self.cfg.params;
        let tff = &self.cfg.tff;

        if let Some(obs) = self.perception.observe(world).filter(|o| o.valid) {
            let pid_dt = match self.last_obs_tick {
                Some(prev) if obs.tick_observed > prev => {
                    (obs.tick_observed - prev) as f64 / self.tick_rate as f64
                }
                _ => 1.0 / self.cfg.perception.sample_rate as f64,
            };
            self.last_obs_tick = Some(obs.tick_observed);
            self.last_valid_time = Some(now);
            self.state = tff_update_mode(self.state, &obs);
            self.state.target_valid = true;
            self.last_error = obs.range() - tff.follow_distance;
            let (v, next) = tff_longitudinal(self.state, &obs, tff, params.v_max, pid_dt);
            self.state = next;
            self.v_cmd = v;
            if self.state.mode == TffMode::Active {
                self.steer_target = tff_lateral(&obs, tff, params);
            }
        } else if self.state.mode == TffMode::Active {
            let lost_for = self.last_valid_time.map_or(f64::INFINITY, |t| now - t);
            if lost_for > tff.detection_hold {
                self.state.target_valid = false;
                self.v_cmd = (self.v_cmd - params.decel_limit * dt).max(0.0);
            }
        }

        if self.state.mode == TffMode::Inactive {
            self.v_cmd = 0.0;
            self.steer_target = world.vehicle.steer_angle;
        }

        let override_cmd = self
            .cfg
            .override_stop_at
            .filter(|&t| now >= t)
            .map(|_| Override::FullStop);
        let cmd = act(
            self.v_cmd,
            self.steer_target,
            &world.vehicle,
            params,
            override_cmd.as_ref(),
            dt,
        );
        self.trace.push(ControllerTraceRow {
            tick: world.tick(),
            mode: self.state.mode,
            armed: self.state.armed,
            e: self.last_error,
            v_cmd: self.v_cmd,
            steer_cmd: cmd.steer_cmd,
        });
        cmd
    }
}

impl VehiclePolicy for VehicleAgent {
    fn command(&mut self, world: &WorldSnapshot) -> Option<VehicleCommand> {
        Some(self.step(world))
    }
}

/// Ticks at which the mode switched from `from` to the other mode.
pub fn mode_switches(trace: &[ControllerTraceRow], from: TffMode) -> Vec<u32> {
    trace
        .windows(2)
        .filter(|w| w[0].mode == from && w[1].mode != from)
        .map(|w| w[1].tick)
        .collect()
}
