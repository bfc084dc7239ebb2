//! Ground-truth trajectory logs: JSON Lines, one row per tick, with run
//! metadata in a `.meta.json` sidecar so equal runs stay byte-identical.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clock::SimClock;
use crate::geometry::Pose2;
use crate::world::{CyclistState, HandHeight, ScenarioPhase, VehicleState, WorldSnapshot};

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Meta(#[from] serde_json::Error),
    #[error("log is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehRow {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycRow {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub lean: f64,
    pub hand: HandHeight,
    pub p: f64,
    pub bf: f64,
    pub br: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub tick: u32,
    pub t: f64,
    pub veh: VehRow,
    pub cyc: CycRow,
    pub phase: ScenarioPhase,
}

impl LogRow {
    pub fn from_world(w: &WorldSnapshot) -> Self {
        let v = &w.vehicle;
        let c = &w.cyclist;
        Self {
            tick: w.tick(),
            t: w.time(),
            veh: VehRow {
                x: v.pose.x,
                y: v.pose.y,
                psi: v.pose.heading,
                v: v.speed,
                delta: v.steer_angle,
            },
            cyc: CycRow {
                x: c.pose.x,
                y: c.pose.y,
                psi: c.pose.heading,
                v: c.speed,
                lean: c.lean,
                hand: c.hand_height,
                p: c.pedal_power,
                bf: c.brake_force_front,
                br: c.brake_force_rear,
            },
            phase: w.scenario_phase,
        }
    }

    /// Rebuilds the logged part of the world; untransmitted fields are zero.
    pub fn to_world(&self, tick_rate: u32) -> WorldSnapshot {
        WorldSnapshot {
            clock: SimClock::at(self.tick, tick_rate),
            vehicle: VehicleState {
                pose: Pose2 {
                    x: self.veh.x,
                    y: self.veh.y,
                    heading: self.veh.psi,
                },
                speed: self.veh.v,
                steer_angle: self.veh.delta,
                accel_cmd: 0.0,
                steer_cmd: 0.0,
            },
            cyclist: CyclistState {
                pose: Pose2 {
                    x: self.cyc.x,
                    y: self.cyc.y,
                    heading: self.cyc.psi,
                },
                speed: self.cyc.v,
                lean: self.cyc.lean,
                steer_angle: 0.0,
                hand_height: self.cyc.hand,
                pedal_power: self.cyc.p,
                brake_force_front: self.cyc.bf,
                brake_force_rear: self.cyc.br,
            },
            scenario_phase: self.phase,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("log rows serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LogMeta {
    pub script: String,
    pub seed: u64,
    pub mode: String,
    pub config_hash: String,
    pub tick_rate: u32,
    pub timed_out: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub meta: LogMeta,
    pub rows: Vec<LogRow>,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Hex SHA-256 of any serializable configuration.
pub fn config_hash<S: Serialize>(cfg: &S) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl TrajectoryLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&row.to_json());
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<LogRow>, LogError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|source| LogError::Parse {
                    line: i + 1,
                    source,
                })
            })
            .collect()
    }

    /// Writes the rows and the metadata sidecar.
    pub fn write(&self, path: &Path) -> Result<(), LogError> {
        let mut w = BufWriter::new(File::create(path)?);
        for row in &self.rows {
            serde_json::to_writer(&mut w, row)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        std::fs::write(meta_path(path), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }

    /// Reads rows and, when present, the metadata sidecar.
    pub fn read(path: &Path) -> Result<Self, LogError> {
        let reader = BufReader::new(File::open(path)?);
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            rows.push(
                serde_json::from_str(&line).map_err(|source| LogError::Parse {
                    line: i + 1,
                    source,
                })?,
            );
        }
        let meta = match std::fs::read_to_string(meta_path(path)) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(_) => LogMeta::default(),
        };
        Ok(Self { meta, rows })
    }

    pub fn tick_rate(&self) -> u32 {
        if self.meta.tick_rate > 0 {
            self.meta.tick_rate
        } else {
            crate::clock::DEFAULT_TICK_RATE
        }
    }

    pub fn worlds(&self) -> impl Iterator<Item = WorldSnapshot> + '_ {
        let rate = self.tick_rate();
        self.rows.iter().map(move |r| r.to_world(rate))
    }

    pub fn last(&self) -> Result<&LogRow, LogError> {
        self.rows.last().ok_or(LogError::Empty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> WorldSnapshot {
        let mut w = WorldSnapshot::new(
            SimClock::at(12, 90),
            VehicleState::at_rest(Pose2::new(-10.0, 0.25, 0.1)),
            CyclistState::at_rest(Pose2::new(0.5, 0.0, 0.0)),
        );
        w.cyclist.hand_height = HandHeight::AboveHead;
        w.cyclist.speed = 1.0 / 3.0;
        w.vehicle.steer_angle = -0.0123456789;
        w
    }

    #[test]
    fn row_format() {
        let row = LogRow::from_world(&sample());
        let v: serde_json::Value = serde_json::from_str(&row.to_json()).unwrap();
        assert_eq!(v["tick"], 12);
        assert_eq!(v["cyc"]["hand"], "above");
        for key in ["x", "y", "psi", "v", "delta"] {
            assert!(v["veh"][key].is_number(), "{key}");
        }
        for key in ["x", "y", "psi", "v", "lean", "p", "bf", "br"] {
            assert!(v["cyc"][key].is_number(), "{key}");
        }
        assert_eq!(v["phase"], "PreStart");
    }

    #[test]
    fn file_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let log = TrajectoryLog {
            meta: LogMeta {
                script: "x".into(),
                seed: 3,
                tick_rate: 90,
                ..LogMeta::default()
            },
            rows: vec![LogRow::from_world(&sample()); 3],
        };
        log.write(&path).unwrap();
        let back = TrajectoryLog::read(&path).unwrap();
        assert_eq!(back, log);
        assert_eq!(
            TrajectoryLog::parse_jsonl(&log.to_jsonl()).unwrap(),
            log.rows
        );
        assert!(meta_path(&path).exists());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"a": 1}));
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_hash(&serde_json::json!({"a": 1})));
        assert_ne!(a, config_hash(&serde_json::json!({"a": 2})));
    }
}
