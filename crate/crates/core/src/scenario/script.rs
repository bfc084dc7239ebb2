//! Maneuver scripts: course, target speed, gesture/stop events and start
//! poses, loadable from JSON with unit suffixes.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, Pose2};
use crate::units::{self, UnitsError};

use super::path::{Path, PathError, Segment};

pub const DEFAULT_TARGET_SPEED: f64 = 1.25;
pub const DEFAULT_FOLLOW_DISTANCE: f64 = 5.0;
/// Extra distance the vehicle starts behind the follow distance, m.
pub const START_GAP_MARGIN: f64 = 5.0;
/// Time of the opening start gesture, s.
pub const DEFAULT_START_TIME: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("unknown maneuver `{0}`")]
    UnknownManeuver(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("event {index}: {reason}")]
    InvalidEvent { index: usize, reason: String },
    #[error("position events out of order at index {0}")]
    EventsUnordered(usize),
    #[error("target speed must be positive, got {0}")]
    BadSpeed(f64),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maneuver {
    StraightWithStop,
    Circle,
    DoubleLaneChange,
}

impl FromStr for Maneuver {
    type Err = ScriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "straight_with_stop" | "straight_stop" | "straight" => Ok(Self::StraightWithStop),
            "circle" => Ok(Self::Circle),
            "double_lane_change" | "dlc" => Ok(Self::DoubleLaneChange),
            _ => Err(ScriptError::UnknownManeuver(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    StartGesture,
    /// Stop at the position, wait for the vehicle to stand still, gesture.
    StopGesture,
    /// As `StopGesture`, then wait `dwell` seconds and ride on.
    IntermediateStop {
        dwell: f64,
    },
}

/// An event fires at an arc-length position or at a time, never both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    pub event: EventKind,
}

impl ScriptEvent {
    pub fn at(position: f64, event: EventKind) -> Self {
        Self {
            position: Some(position),
            time: None,
            event,
        }
    }

    pub fn after(time: f64, event: EventKind) -> Self {
        Self {
            position: None,
            time: Some(time),
            event,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverScript {
    pub name: String,
    pub path: Vec<Segment>,
    pub target_speed: f64,
    pub events: Vec<ScriptEvent>,
    pub start_pose_vehicle: Pose2,
    pub start_pose_cyclist: Pose2,
}

/// Knobs for the built-in maneuvers; `None` keeps the default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ManeuverOverrides {
    pub target_speed: Option<f64>,
    pub follow_distance: Option<f64>,
    pub radius: Option<f64>,
    pub laps: Option<f64>,
    pub lateral_offset: Option<f64>,
    pub dwell: Option<f64>,
}

impl ManeuverScript {
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let script: Self = units::from_json_str(text)?;
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScriptError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("script serializes")
    }

    /// Builds the course and checks events against it.
    pub fn validate(&self) -> Result<Path, ScriptError> {
        let path = Path::new(&self.path)?;
        if !(self.target_speed > 0.0) || !self.target_speed.is_finite() {
            return Err(ScriptError::BadSpeed(self.target_speed));
        }
        let mut last = f64::NEG_INFINITY;
        for (index, ev) in self.events.iter().enumerate() {
            let bad = |reason: &str| ScriptError::InvalidEvent {
                index,
                reason: reason.to_string(),
            };
            match (ev.position, ev.time) {
                (Some(s), None) => {
                    if !(0.0..=path.length() + 1e-9).contains(&s) {
                        return Err(bad("position outside the path"));
                    }
                    if s < last {
                        return Err(ScriptError::EventsUnordered(index));
                    }
                    last = s;
                }
                (None, Some(t)) => {
                    if !(t >= 0.0) || !t.is_finite() {
                        return Err(bad("time must be non-negative"));
                    }
                }
                _ => return Err(bad("needs exactly one of `position` or `time`")),
            }
            if let EventKind::IntermediateStop { dwell } = ev.event {
                if !(dwell >= 0.0) || !dwell.is_finite() {
                    return Err(bad("dwell must be non-negative"));
                }
            }
        }
        Ok(path)
    }

    pub fn course(&self) -> Result<Path, ScriptError> {
        self.validate()
    }
}

fn line(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
    Segment::Line {
        from: Point2::new(ax, ay),
        to: Point2::new(bx, by),
    }
}

/// Vehicle start pose `gap` metres behind the cyclist along its heading.
fn behind(cyclist: Pose2, gap: f64) -> Pose2 {
    let (s, c) = cyclist.heading.sin_cos();
    Pose2::new(cyclist.x - gap * c, cyclist.y - gap * s, cyclist.heading)
}

pub fn build_maneuver(kind: Maneuver, overrides: &ManeuverOverrides) -> ManeuverScript {
    let target_speed = overrides.target_speed.unwrap_or(DEFAULT_TARGET_SPEED);
    let gap = overrides.follow_distance.unwrap_or(DEFAULT_FOLLOW_DISTANCE) + START_GAP_MARGIN;
    let start = Pose2::new(0.0, 0.0, 0.0);
    let opening = ScriptEvent::after(DEFAULT_START_TIME, EventKind::StartGesture);
    let (name, path, events) = match kind {
        Maneuver::StraightWithStop => {
            let dwell = overrides.dwell.unwrap_or(2.0);
            (
                "straight_stop",
                vec![line(0.0, 0.0, 30.0, 0.0), line(30.0, 0.0, 65.0, 0.0)],
                vec![
                    opening,
                    ScriptEvent::at(30.0, EventKind::IntermediateStop { dwell }),
                    ScriptEvent::at(35.0, EventKind::StartGesture),
                    ScriptEvent::at(65.0, EventKind::StopGesture),
                ],
            )
        }
        Maneuver::Circle => {
            let radius = overrides.radius.unwrap_or(16.5);
            let laps = overrides.laps.unwrap_or(2.25);
            let len = TAU * radius * laps;
            (
                "circle_16p5",
                vec![Segment::Arc {
                    center: Point2::new(0.0, radius),
                    radius,
                    start_angle: -PI / 2.0,
                    sweep: TAU * laps,
                }],
                vec![opening, ScriptEvent::at(len, EventKind::StopGesture)],
            )
        }
        Maneuver::DoubleLaneChange => {
            let off = overrides.lateral_offset.unwrap_or(3.5);
            let blend = |x: f64, y: f64, offset: f64| Segment::LateralBlend {
                from: Point2::new(x, y),
                heading: 0.0,
                length: 13.5,
                offset,
                samples: 256,
            };
            let path = vec![
                line(0.0, 0.0, 15.0, 0.0),
                blend(15.0, 0.0, off),
                line(28.5, off, 39.5, off),
                blend(39.5, off, -off),
                line(53.0, 0.0, 68.0, 0.0),
            ];
            let len = Path::new(&path).expect("built-in course is valid").length();
            (
                "dlc",
                path,
                vec![opening, ScriptEvent::at(len, EventKind::StopGesture)],
            )
        }
    };
    ManeuverScript {
        name: name.to_string(),
        path,
        target_speed,
        events,
        start_pose_vehicle: behind(start, gap),
        start_pose_cyclist: start,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circle_length_and_start() {
        let s = build_maneuver(Maneuver::Circle, &ManeuverOverrides::default());
        let path = s.validate().unwrap();
        assert_abs_diff_eq!(path.length(), 2.0 * PI * 16.5 * 2.25, epsilon = 1e-9);
        assert_abs_diff_eq!(path.length(), 233.26, epsilon = 0.005);
        assert_eq!(s.start_pose_vehicle, Pose2::new(-10.0, 0.0, 0.0));
        assert_eq!(s.target_speed, 1.25);
    }

    #[test]
    fn straight_layout() {
        let s = build_maneuver(Maneuver::StraightWithStop, &ManeuverOverrides::default());
        assert_eq!(s.validate().unwrap().length(), 65.0);
        let stops: Vec<_> = s
            .events
            .iter()
            .filter(|e| matches!(e.event, EventKind::IntermediateStop { .. }))
            .collect();
        assert_eq!(stops.len(), 1);
        assert_eq!(stops[0].position, Some(30.0));
    }

    /// Fine midpoint quadrature of one smoothstep blend.
    fn blend_length(length: f64, offset: f64) -> f64 {
        let n = 200_000;
        let h = 1.0 / n as f64;
        (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) * h;
                let dy = offset * 6.0 * u * (1.0 - u) / length;
                length * (1.0 + dy * dy).sqrt() * h
            })
            .sum()
    }

    #[test]
    fn dlc_geometry() {
        let s = build_maneuver(Maneuver::DoubleLaneChange, &ManeuverOverrides::default());
        let path = s.validate().unwrap();
        let reference = 15.0 + 11.0 + 15.0 + 2.0 * blend_length(13.5, 3.5);
        assert!((path.length() - reference).abs() / reference < 1e-3);
        let mut peak: f64 = 0.0;
        let n = 2000;
        for i in 0..=n {
            let (p, _) = path.query(path.length() * i as f64 / n as f64).unwrap();
            peak = peak.max(p.y);
        }
        assert_abs_diff_eq!(peak, 3.5, epsilon = 1e-9);
        let (end, heading) = path.query(path.length()).unwrap();
        assert_eq!(end.y, 0.0);
        assert_eq!(heading, 0.0);
    }

    #[test]
    fn unknown_maneuver() {
        assert!(matches!(
            "figure_eight".parse::<Maneuver>(),
            Err(ScriptError::UnknownManeuver(_))
        ));
        assert_eq!(
            "dlc".parse::<Maneuver>().unwrap(),
            Maneuver::DoubleLaneChange
        );
    }

    #[test]
    fn json_roundtrip_and_units() {
        for kind in [
            Maneuver::StraightWithStop,
            Maneuver::Circle,
            Maneuver::DoubleLaneChange,
        ] {
            let s = build_maneuver(kind, &ManeuverOverrides::default());
            assert_eq!(ManeuverScript::from_json(&s.to_json()).unwrap(), s);
        }
        let text = r#"{
            "name": "short",
            "path": [{"line": {"from": {"x": 0, "y": 0}, "to": {"x": 10, "y": 0}}}],
            "target_speed_kmh": 4.5,
            "events": [{"time": 1.0, "event": "start_gesture"},
                       {"position": 10.0, "event": "stop_gesture"}],
            "start_pose_vehicle": {"x": -10, "y": 0, "heading_deg": 0},
            "start_pose_cyclist": {"x": 0, "y": 0, "heading": 0}
        }"#;
        let s = ManeuverScript::from_json(text).unwrap();
        assert_abs_diff_eq!(s.target_speed, 1.25, epsilon = 1e-12);
    }

    #[test]
    fn invalid_events() {
        let mut s = build_maneuver(Maneuver::StraightWithStop, &ManeuverOverrides::default());
        s.events.swap(1, 2);
        assert!(matches!(s.validate(), Err(ScriptError::EventsUnordered(_))));
        let mut s = build_maneuver(Maneuver::Circle, &ManeuverOverrides::default());
        s.events[0].position = Some(1.0);
        assert!(matches!(
            s.validate(),
            Err(ScriptError::InvalidEvent { index: 0, .. })
        ));
        s.events[0].position = None;
        s.target_speed = 0.0;
        assert!(matches!(s.validate(), Err(ScriptError::BadSpeed(_))));
    }
}
