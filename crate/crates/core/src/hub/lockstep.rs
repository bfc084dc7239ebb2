//! Single-process, socket-free hub: the reference semantics for tests.

use log::warn;

use crate::clock::Decimator;
use crate::policy::{RiderPolicy, VehiclePolicy};
use crate::protocol::{ChannelError, FreshnessFilter, SimChannel, SnapshotMsg};
use crate::world::{RiderInput, ScenarioPhase, VehicleCommand, WorldSnapshot};

use super::log::{config_hash, LogMeta, LogRow, TrajectoryLog};
use super::{hub_step, HubConfig};

/// Seed offsets keeping the two input links' random streams apart.
const VEHICLE_LINK_SALT: u64 = 0x5645_4849;
const RIDER_LINK_SALT: u64 = 0x5249_4445;

pub struct LockstepHub {
    cfg: HubConfig,
    world: WorldSnapshot,
    vehicle_cmd: VehicleCommand,
    rider_input: RiderInput,
    vehicle_link: SimChannel<(u32, VehicleCommand)>,
    rider_link: SimChannel<(u32, RiderInput)>,
    vehicle_fresh: FreshnessFilter,
    rider_fresh: FreshnessFilter,
    snapshots: Decimator,
    rows: Vec<LogRow>,
    end_requested: bool,
    last_vehicle_input: u32,
    last_rider_input: u32,
    starvation_warned: (bool, bool),
}

impl LockstepHub {
    pub fn new(cfg: HubConfig, initial: WorldSnapshot) -> Result<Self, ChannelError> {
        let link = cfg.input_channel;
        let vehicle_link = SimChannel::new(link.seeded(cfg.seed ^ link.seed ^ VEHICLE_LINK_SALT))?;
        let rider_link = SimChannel::new(link.seeded(cfg.seed ^ link.seed ^ RIDER_LINK_SALT))?;
        let snapshots = Decimator::new(cfg.tick_rate, cfg.snapshot_rate);
        Ok(Self {
            cfg,
            world: initial,
            vehicle_cmd: VehicleCommand::default(),
            rider_input: RiderInput::default(),
            vehicle_link,
            rider_link,
            vehicle_fresh: FreshnessFilter::new(),
            rider_fresh: FreshnessFilter::new(),
            snapshots,
            rows: vec![LogRow::from_world(&initial)],
            end_requested: false,
            last_vehicle_input: 0,
            last_rider_input: 0,
            starvation_warned: (false, false),
        })
    }

    pub fn config(&self) -> &HubConfig {
        &self.cfg
    }

    pub fn world(&self) -> &WorldSnapshot {
        &self.world
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    pub fn vehicle_input(&self) -> &VehicleCommand {
        &self.vehicle_cmd
    }

    pub fn rider_input(&self) -> &RiderInput {
        &self.rider_input
    }

    /// Marks the next produced snapshot `Ended`.
    pub fn request_end(&mut self) {
        self.end_requested = true;
    }

    pub fn is_ended(&self) -> bool {
        self.world.scenario_phase == ScenarioPhase::Ended
    }

    /// Snapshot as the agents receive it over the wire.
    pub fn broadcast_view(&self) -> WorldSnapshot {
        SnapshotMsg::from_world(&self.world).into_world(self.world.tick(), self.cfg.tick_rate)
    }

    /// Runs the agents on the current snapshot (on broadcast ticks), ingests
    /// whatever inputs have arrived, and advances one tick.
    pub fn tick<V, R>(&mut self, vehicle: &mut V, rider: &mut R) -> &WorldSnapshot
    where
        V: VehiclePolicy + ?Sized,
        R: RiderPolicy + ?Sized,
    {
        let tick = self.world.tick();
        let now = self.world.time();
        if self.snapshots.fires(tick) {
            let view = self.broadcast_view();
            if let Some(cmd) = vehicle.command(&view) {
                self.vehicle_link.send(now, (tick, cmd));
            }
            if let Some(input) = rider.input(&view) {
                self.rider_link.send(now, (tick, input));
            }
        }
        self.ingest(now);
        self.advance()
    }

    /// Queues inputs directly, bypassing the policies.
    pub fn send_vehicle(&mut self, sent_tick: u32, cmd: VehicleCommand) {
        let now = self.world.time();
        self.vehicle_link.send(now, (sent_tick, cmd));
    }

    pub fn send_rider(&mut self, sent_tick: u32, input: RiderInput) {
        let now = self.world.time();
        self.rider_link.send(now, (sent_tick, input));
    }

    /// Queues a rider input sent at an arbitrary time, e.g. between ticks.
    /// It must not be earlier than the current tick's time.
    pub fn send_rider_at(&mut self, send_time: f64, sent_tick: u32, input: RiderInput) {
        self.rider_link.send(send_time, (sent_tick, input));
    }

    fn ingest(&mut self, now: f64) {
        let due = now + 1e-9;
        let tick = self.world.tick();
        for (sent, cmd) in self.vehicle_link.poll(due) {
            if self.vehicle_fresh.accept(sent) {
                self.vehicle_cmd = cmd;
                self.last_vehicle_input = tick;
                self.starvation_warned.0 = false;
            }
        }
        for (sent, input) in self.rider_link.poll(due) {
            if self.rider_fresh.accept(sent) {
                self.rider_input = input;
                self.last_rider_input = tick;
                self.starvation_warned.1 = false;
            }
        }
        let limit = self.cfg.tick_rate;
        if tick.saturating_sub(self.last_vehicle_input) > limit && !self.starvation_warned.0 {
            warn!(
                "tick {tick}: no vehicle input since tick {}",
                self.last_vehicle_input
            );
            self.starvation_warned.0 = true;
        }
        if tick.saturating_sub(self.last_rider_input) > limit && !self.starvation_warned.1 {
            warn!(
                "tick {tick}: no rider input since tick {}",
                self.last_rider_input
            );
            self.starvation_warned.1 = true;
        }
    }

    /// One integration step with the held inputs.
    pub fn advance(&mut self) -> &WorldSnapshot {
        self.world = hub_step(
            &self.world,
            &self.vehicle_cmd,
            &self.rider_input,
            &self.cfg.vehicle,
            &self.cfg.cyclist,
            self.end_requested,
        );
        self.rows.push(LogRow::from_world(&self.world));
        &self.world
    }

    pub fn default_meta(&self, script: &str) -> LogMeta {
        LogMeta {
            script: script.to_string(),
            seed: self.cfg.seed,
            mode: "lockstep".to_string(),
            config_hash: config_hash(&self.cfg),
            tick_rate: self.cfg.tick_rate,
            timed_out: false,
            note: None,
        }
    }

    pub fn into_log(self, meta: LogMeta) -> TrajectoryLog {
        TrajectoryLog {
            meta,
            rows: self.rows,
        }
    }
}

/// Runs `n_ticks` lockstep ticks and returns the ground-truth log, writing
/// it when the config names a log path.
pub fn run_lockstep<V, R>(
    cfg: &HubConfig,
    initial: WorldSnapshot,
    vehicle: &mut V,
    rider: &mut R,
    n_ticks: u32,
) -> Result<TrajectoryLog, super::LogError>
where
    V: VehiclePolicy + ?Sized,
    R: RiderPolicy + ?Sized,
{
    let mut hub = LockstepHub::new(cfg.clone(), initial)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    for _ in 0..n_ticks {
        hub.tick(vehicle, rider);
    }
    let meta = hub.default_meta("");
    let log = hub.into_log(meta);
    if let Some(path) = &cfg.log_path {
        log.write(path)?;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimClock;
    use crate::geometry::Pose2;
    use crate::policy::{Idle, RiderFn};
    use crate::protocol::ChannelCondition;
    use crate::world::{CyclistState, VehicleState};

    fn initial() -> WorldSnapshot {
        WorldSnapshot::new(
            SimClock::new(90),
            VehicleState::at_rest(Pose2::new(-10.0, 0.0, 0.0)),
            CyclistState::at_rest(Pose2::new(0.0, 0.0, 0.0)),
        )
    }

    #[test]
    fn zero_ticks_logs_initial_only() {
        let log = run_lockstep(&HubConfig::default(), initial(), &mut Idle, &mut Idle, 0).unwrap();
        assert_eq!(log.rows.len(), 1);
        assert_eq!(log.rows[0].tick, 0);
    }

    #[test]
    fn ticks_are_contiguous() {
        let log = run_lockstep(&HubConfig::default(), initial(), &mut Idle, &mut Idle, 50).unwrap();
        assert_eq!(log.rows.len(), 51);
        for (i, r) in log.rows.iter().enumerate() {
            assert_eq!(r.tick as usize, i);
        }
    }

    #[test]
    fn hold_last_value_equals_repetition() {
        let cmd = VehicleCommand {
            accel_cmd: 0.4,
            steer_cmd: 0.1,
        };
        let pedal = RiderInput {
            pedal_power: 80.0,
            steer_angle: 0.05,
            ..RiderInput::default()
        };
        let mut once_v = |w: &WorldSnapshot| (w.tick() == 0).then_some(cmd);
        let mut once_r = RiderFn(|w: &WorldSnapshot| (w.tick() == 0).then_some(pedal));
        let mut always_v = |_: &WorldSnapshot| Some(cmd);
        let mut always_r = RiderFn(|_: &WorldSnapshot| Some(pedal));
        let a = run_lockstep(
            &HubConfig::default(),
            initial(),
            &mut once_v,
            &mut once_r,
            200,
        )
        .unwrap();
        let b = run_lockstep(
            &HubConfig::default(),
            initial(),
            &mut always_v,
            &mut always_r,
            200,
        )
        .unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn snapshot_decimation_limits_policy_calls() {
        let cfg = HubConfig {
            snapshot_rate: 60,
            ..HubConfig::default()
        };
        let mut seen = Vec::new();
        let mut spy = |w: &WorldSnapshot| {
            seen.push(w.tick());
            None
        };
        run_lockstep(&cfg, initial(), &mut spy, &mut Idle, 9).unwrap();
        assert_eq!(seen, vec![0, 1, 3, 4, 6, 7]);
    }

    #[test]
    fn delayed_inputs_arrive_later() {
        let cfg = HubConfig {
            input_channel: ChannelCondition::with_delay_ms(100.0),
            ..HubConfig::default()
        };
        let mut hub = LockstepHub::new(cfg, initial()).unwrap();
        let mut v = |w: &WorldSnapshot| {
            (w.tick() == 0).then_some(VehicleCommand {
                accel_cmd: 1.0,
                steer_cmd: 0.0,
            })
        };
        let mut first_move = None;
        for _ in 0..30 {
            let w = *hub.tick(&mut v, &mut Idle);
            if first_move.is_none() && w.vehicle.speed > 0.0 {
                first_move = Some(w.tick());
            }
        }
        // sent at t=0, due at 0.1 s = tick 9, applied in the 9 -> 10 step
        assert_eq!(first_move, Some(10));
    }

    #[test]
    fn equal_seeds_give_identical_logs() {
        let cfg = HubConfig {
            input_channel: ChannelCondition {
                delay_ms: 20.0,
                jitter_ms: 30.0,
                drop_probability: 0.2,
                seed: 4,
            },
            seed: 11,
            ..HubConfig::default()
        };
        let run = || {
            let mut v = |w: &WorldSnapshot| {
                Some(VehicleCommand {
                    accel_cmd: 0.5,
                    steer_cmd: 0.01 * (w.tick() % 7) as f64,
                })
            };
            run_lockstep(&cfg, initial(), &mut v, &mut Idle, 300)
                .unwrap()
                .to_jsonl()
        };
        assert_eq!(run(), run());
    }
}
