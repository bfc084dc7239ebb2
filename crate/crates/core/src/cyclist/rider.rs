//! Scripted rider: pure-pursuit steering, power/brake speed regulation and
//! the gesture choreography of a maneuver script.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, Pose2};
use crate::policy::RiderPolicy;
use crate::scenario::{EventKind, ManeuverScript, Path, ScriptError};
use crate::world::{HandHeight, RiderInput, WorldSnapshot};

use super::physics::resistance_force;
use super::CyclistParams;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum RiderError {
    #[error("rider is {lateral:.2} m off the path at s = {s:.2} m")]
    OffPath { lateral: f64, s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiderGains {
    pub lookahead: f64,
    pub max_steer: f64,
    /// W per m/s of speed error on top of the resistance feed-forward.
    pub power_gain: f64,
    pub max_power: f64,
    /// Lever fraction per m/s of overspeed.
    pub brake_gain: f64,
    /// Planned deceleration into a stop, m/s^2.
    pub stop_decel: f64,
    /// How long a raised hand is held, s.
    pub gesture_hold: f64,
    pub standstill_speed: f64,
    /// Vehicle standstill time required before a stop gesture, s.
    pub standstill_time: f64,
    /// Give up waiting for the vehicle after this long, s.
    pub max_wait: f64,
    pub off_path_limit: f64,
}

impl Default for RiderGains {
    fn default() -> Self {
        Self {
            lookahead: 3.0,
            max_steer: 0.5,
            power_gain: 150.0,
            max_power: 400.0,
            brake_gain: 2.0,
            stop_decel: 0.5,
            gesture_hold: 1.0,
            standstill_speed: 0.05,
            standstill_time: 1.0,
            max_wait: 20.0,
            off_path_limit: 5.0,
        }
    }
}

/// Pure-pursuit handlebar angle toward `goal` at nominal lookahead `ld`.
pub fn pure_pursuit_steer(pose: &Pose2, goal: Point2, ld: f64, wheelbase: f64) -> f64 {
    let local = pose.to_local(goal);
    let kappa = 2.0 * local.y / (ld * ld);
    (wheelbase * kappa).atan()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    AwaitStart,
    Riding,
    Stopping {
        at: f64,
        kind: EventKind,
    },
    Holding {
        kind: EventKind,
        since: f64,
        still_since: Option<f64>,
    },
    Dwelling {
        until: f64,
    },
    Finished,
}

#[derive(Debug, Clone)]
pub struct ScriptedRider {
    path: Path,
    target_speed: f64,
    params: CyclistParams,
    gains: RiderGains,
    position_events: Vec<(f64, EventKind)>,
    time_events: Vec<(f64, EventKind)>,
    next_position: usize,
    next_time: usize,
    mode: Mode,
    s: Option<f64>,
    hand_until: Option<f64>,
    gestures: u32,
    error: Option<RiderError>,
}

impl ScriptedRider {
    pub fn new(
        script: &ManeuverScript,
        params: CyclistParams,
        gains: RiderGains,
    ) -> Result<Self, ScriptError> {
        let path = script.validate()?;
        let mut position_events = Vec::new();
        let mut time_events = Vec::new();
        for ev in &script.events {
            match (ev.position, ev.time) {
                (Some(s), _) => position_events.push((s, ev.event)),
                (_, Some(t)) => time_events.push((t, ev.event)),
                _ => unreachable!("validated"),
            }
        }
        time_events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mode = if time_events
            .first()
            .is_some_and(|e| e.1 == EventKind::StartGesture)
            || position_events
                .first()
                .is_some_and(|e| e.0 <= 0.0 && e.1 == EventKind::StartGesture)
        {
            Mode::AwaitStart
        } else {
            Mode::Riding
        };
        Ok(Self {
            path,
            target_speed: script.target_speed,
            params,
            gains,
            position_events,
            time_events,
            next_position: 0,
            next_time: 0,
            mode,
            s: None,
            hand_until: None,
            gestures: 0,
            error: None,
        })
    }

    pub fn progress(&self) -> f64 {
        self.s.unwrap_or(0.0)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn finished(&self) -> bool {
        self.mode == Mode::Finished
    }

    /// Number of hand raises issued so far.
    pub fn gestures(&self) -> u32 {
        self.gestures
    }

    pub fn error(&self) -> Option<RiderError> {
        self.error
    }

    fn raise_hand(&mut self, now: f64) {
        self.hand_until = Some(now + self.gains.gesture_hold);
        self.gestures += 1;
    }

    fn hand(&self, now: f64) -> HandHeight {
        match self.hand_until {
            None => HandHeight::Between,
            Some(until) if now < until => HandHeight::AboveHead,
            Some(_) => HandHeight::BelowShoulder,
        }
    }

    fn hand_is_up(&self, now: f64) -> bool {
        self.hand(now) == HandHeight::AboveHead
    }

    fn braking_distance(&self, v: f64) -> f64 {
        v * v / (2.0 * self.gains.stop_decel)
    }

    fn goal_point(&self, origin: Point2, s: f64) -> Point2 {
        let ld = self.gains.lookahead;
        let s_goal = self.path.intersect_ahead(origin, s, ld);
        let (p, heading) = self.path.query_clamped(s_goal);
        if p.distance(&origin) >= ld - 1e-9 {
            return p;
        }
        // Past the end: continue along the final tangent.
        let d = Point2::new(heading.cos(), heading.sin());
        let w = p.sub(&origin);
        let b = w.x * d.x + w.y * d.y;
        let c = w.x * w.x + w.y * w.y - ld * ld;
        let t = -b + (b * b - c).max(0.0).sqrt();
        p.add(&d.scale(t))
    }

    /// Speed reference, with the sqrt stop profile when a stop is active.
    fn speed_reference(&self, s: f64) -> f64 {
        match self.mode {
            Mode::Riding => self.target_speed,
            Mode::Stopping { at, .. } => {
                let d = (at - s).max(0.0);
                self.target_speed
                    .min((2.0 * self.gains.stop_decel * d).sqrt())
            }
            _ => 0.0,
        }
    }

    fn fire_time_events(&mut self, now: f64, s: f64, v: f64) {
        while let Some(&(t, kind)) = self.time_events.get(self.next_time) {
            if now + 1e-9 < t {
                break;
            }
            self.next_time += 1;
            match kind {
                EventKind::StartGesture => {
                    self.raise_hand(now);
                    if matches!(self.mode, Mode::AwaitStart) {
                        self.mode = Mode::Dwelling {
                            until: now + self.gains.gesture_hold,
                        };
                    }
                }
                kind => {
                    if matches!(self.mode, Mode::Riding) {
                        self.mode = Mode::Stopping {
                            at: (s + self.braking_distance(v)).min(self.path.length()),
                            kind,
                        };
                    }
                }
            }
        }
    }

    fn fire_position_events(&mut self, now: f64, s: f64, v: f64) {
        while let Some(&(at, kind)) = self.position_events.get(self.next_position) {
            match kind {
                EventKind::StartGesture => {
                    if s + 1e-9 < at {
                        break;
                    }
                    self.next_position += 1;
                    self.raise_hand(now);
                    if matches!(self.mode, Mode::AwaitStart) {
                        self.mode = Mode::Dwelling {
                            until: now + self.gains.gesture_hold,
                        };
                    }
                }
                kind => {
                    if !matches!(self.mode, Mode::Riding) {
                        break;
                    }
                    if at - s > self.braking_distance(v.max(self.target_speed)) + 0.05 {
                        break;
                    }
                    self.next_position += 1;
                    self.mode = Mode::Stopping { at, kind };
                }
            }
        }
    }

    /// One rider decision from the latest snapshot.
    pub fn step(&mut self, world: &WorldSnapshot) -> Result<RiderInput, RiderError> {
        let now = world.time();
        let me = &world.cyclist;
        let pos = me.pose.position();
        let v = me.speed;
        let proj = match self.s {
            None => self.path.project_near(pos, 0.0, 5.0),
            Some(prev) => self.path.project_near(pos, prev, 5.0),
        };
        let s = proj.s;
        self.s = Some(s);
        if proj.lateral.abs() > self.gains.off_path_limit {
            let err = RiderError::OffPath {
                lateral: proj.lateral,
                s,
            };
            self.error = Some(err);
            return Err(err);
        }

        self.fire_time_events(now, s, v);
        self.fire_position_events(now, s, v);

        // Stop and hold bookkeeping.
        match self.mode {
            Mode::Stopping { at, kind } => {
                if v < 1e-6 && (at - s < 0.5 || self.speed_reference(s) < 0.05) {
                    self.mode = Mode::Holding {
                        kind,
                        since: now,
                        still_since: None,
                    };
                }
            }
            Mode::Holding {
                kind,
                since,
                still_since,
            } => {
                let still_since = if world.vehicle.speed < self.gains.standstill_speed {
                    Some(still_since.unwrap_or(now))
                } else {
                    None
                };
                let settled = still_since.is_some_and(|t| now - t >= self.gains.standstill_time);
                if settled || now - since >= self.gains.max_wait {
                    self.raise_hand(now);
                    self.mode = match kind {
                        EventKind::IntermediateStop { dwell } => Mode::Dwelling {
                            until: now + dwell.max(self.gains.gesture_hold),
                        },
                        _ => Mode::Finished,
                    };
                } else {
                    self.mode = Mode::Holding {
                        kind,
                        since,
                        still_since,
                    };
                }
            }
            Mode::Dwelling { until } if now + 1e-9 >= until && !self.hand_is_up(now) => {
                self.mode = Mode::Riding;
            }
            _ => {}
        }

        let hand_height = self.hand(now);
        let mut input = RiderInput {
            hand_height,
            ..RiderInput::default()
        };
        match self.mode {
            Mode::AwaitStart => return Ok(input),
            Mode::Holding { .. } | Mode::Dwelling { .. } | Mode::Finished => {
                input.brake_front = 1.0;
                input.brake_rear = 1.0;
                return Ok(input);
            }
            Mode::Riding | Mode::Stopping { .. } => {}
        }

        let goal = self.goal_point(pos, s);
        input.steer_angle =
            pure_pursuit_steer(&me.pose, goal, self.gains.lookahead, self.params.wheelbase)
                .clamp(-self.gains.max_steer, self.gains.max_steer);
        input.lean = super::steady_state_lean(
            v,
            input.steer_angle,
            self.params.wheelbase,
            self.params.gravity,
        )
        .clamp(-self.params.lean_limit, self.params.lean_limit);

        let v_ref = self.speed_reference(s);
        let stopping = matches!(self.mode, Mode::Stopping { .. });
        if stopping && v_ref < 0.05 && v < 0.3 {
            input.brake_front = 1.0;
            input.brake_rear = 1.0;
            return Ok(input);
        }
        let feed_forward = resistance_force(v_ref, &self.params) * v_ref;
        let power = feed_forward + self.gains.power_gain * (v_ref - v);
        input.pedal_power = power.clamp(0.0, self.gains.max_power);
        if v > v_ref + 0.01 {
            let planned = if stopping {
                (self.params.mass * self.gains.stop_decel - resistance_force(v, &self.params))
                    .max(0.0)
                    / (2.0 * self.params.max_brake_force)
            } else {
                0.0
            };
            let b = (planned + self.gains.brake_gain * (v - v_ref)).clamp(0.0, 1.0);
            input.pedal_power = 0.0;
            input.brake_front = b;
            input.brake_rear = b;
        }
        Ok(input)
    }
}

impl RiderPolicy for ScriptedRider {
    fn input(&mut self, world: &WorldSnapshot) -> Option<RiderInput> {
        if self.error.is_some() {
            return None;
        }
        self.step(world).ok()
    }
}
