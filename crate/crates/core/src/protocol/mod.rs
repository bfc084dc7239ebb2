//! Fixed-layout little-endian datagram protocol between agents and the hub.
//!
//! Every datagram starts with an 11-byte header:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `"CVIL"`                 |
//! | 4      | 1    | version (`1`)                  |
//! | 5      | 1    | message type                   |
//! | 6      | 1    | client id                      |
//! | 7      | 4    | tick, u32 LE                   |
//!
//! Payloads (all reals are IEEE-754 f64 LE):
//!
//! * `Hello` (1): role u8 (1 vehicle, 2 cyclist, 3 rider-console gateway, 4 observer)
//! * `SnapshotBroadcast` (114): vehicle x, y, heading, speed, steer_angle;
//!   cyclist x, y, heading, speed, lean, steer_angle, pedal_power,
//!   brake_force_front, brake_force_rear; hand_height u8; scenario_phase u8
//! * `VehicleInput` (16): accel_cmd, steer_cmd
//! * `RiderInputMsg` (41): pedal_power, brake_front, brake_rear, steer_angle,
//!   lean; hand_height u8
//! * `Bye` (0)
//!
//! Enum bytes: hand_height 1 above head, 2 between, 3 below shoulder;
//! scenario_phase 1 pre-start, 2 running, 3 ended.

mod channel;
mod freshness;

pub use channel::{channel_deliver, ChannelCondition, ChannelError, Delivery, SimChannel};
pub use freshness::{freshness_filter, Freshness, FreshnessFilter};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::SimClock;
use crate::geometry::Pose2;
use crate::world::{
    CyclistState, HandHeight, RiderInput, ScenarioPhase, VehicleCommand, VehicleState,
    WorldSnapshot,
};

pub const MAGIC: [u8; 4] = *b"CVIL";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 11;
pub const DEFAULT_HUB_PORT: u16 = 47900;
pub const MAX_DATAGRAM: usize = 512;

pub const HELLO_PAYLOAD: usize = 1;
pub const SNAPSHOT_PAYLOAD: usize = 14 * 8 + 2;
pub const VEHICLE_INPUT_PAYLOAD: usize = 2 * 8;
pub const RIDER_INPUT_PAYLOAD: usize = 5 * 8 + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    Hello = 1,
    SnapshotBroadcast = 2,
    VehicleInput = 3,
    RiderInputMsg = 4,
    Bye = 5,
}

impl MsgType {
    pub fn from_wire(b: u8) -> Option<Self> {
        Some(match b {
            1 => Self::Hello,
            2 => Self::SnapshotBroadcast,
            3 => Self::VehicleInput,
            4 => Self::RiderInputMsg,
            5 => Self::Bye,
            _ => return None,
        })
    }

    pub fn payload_len(self) -> usize {
        match self {
            Self::Hello => HELLO_PAYLOAD,
            Self::SnapshotBroadcast => SNAPSHOT_PAYLOAD,
            Self::VehicleInput => VEHICLE_INPUT_PAYLOAD,
            Self::RiderInputMsg => RIDER_INPUT_PAYLOAD,
            Self::Bye => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClientRole {
    VehicleAgent,
    CyclistAgent,
    RiderConsoleGateway,
    Observer,
}

impl ClientRole {
    pub fn to_wire(self) -> u8 {
        match self {
            Self::VehicleAgent => 1,
            Self::CyclistAgent => 2,
            Self::RiderConsoleGateway => 3,
            Self::Observer => 4,
        }
    }

    pub fn from_wire(b: u8) -> Option<Self> {
        Some(match b {
            1 => Self::VehicleAgent,
            2 => Self::CyclistAgent,
            3 => Self::RiderConsoleGateway,
            4 => Self::Observer,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketHeader {
    pub msg_type: MsgType,
    pub client_id: u8,
    pub tick: u32,
}

/// The vehicle fields carried by a snapshot broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleKinematics {
    pub pose: Pose2,
    pub speed: f64,
    pub steer_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SnapshotMsg {
    pub vehicle: VehicleKinematics,
    pub cyclist: CyclistState,
    pub phase: ScenarioPhase,
}

impl SnapshotMsg {
    pub fn from_world(world: &WorldSnapshot) -> Self {
        Self {
            vehicle: VehicleKinematics {
                pose: world.vehicle.pose,
                speed: world.vehicle.speed,
                steer_angle: world.vehicle.steer_angle,
            },
            cyclist: world.cyclist,
            phase: world.scenario_phase,
        }
    }

    /// Rebuilds a world snapshot on the receiving side. Command fields that
    /// are not transmitted are zero.
    pub fn into_world(self, tick: u32, tick_rate: u32) -> WorldSnapshot {
        WorldSnapshot {
            clock: SimClock::at(tick, tick_rate),
            vehicle: VehicleState {
                pose: self.vehicle.pose,
                speed: self.vehicle.speed,
                steer_angle: self.vehicle.steer_angle,
                accel_cmd: 0.0,
                steer_cmd: 0.0,
            },
            cyclist: self.cyclist,
            scenario_phase: self.phase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Body {
    Hello { role: ClientRole },
    Snapshot(SnapshotMsg),
    VehicleInput(VehicleCommand),
    RiderInput(RiderInput),
    Bye,
}

impl Body {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Self::Hello { .. } => MsgType::Hello,
            Self::Snapshot(_) => MsgType::SnapshotBroadcast,
            Self::VehicleInput(_) => MsgType::VehicleInput,
            Self::RiderInput(_) => MsgType::RiderInputMsg,
            Self::Bye => MsgType::Bye,
        }
    }
}

/// A decoded datagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub client_id: u8,
    pub tick: u32,
    pub body: Body,
}

impl Packet {
    pub fn new(client_id: u8, tick: u32, body: Body) -> Self {
        Self {
            client_id,
            tick,
            body,
        }
    }

    pub fn header(&self) -> PacketHeader {
        PacketHeader {
            msg_type: self.body.msg_type(),
            client_id: self.client_id,
            tick: self.tick,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("truncated {field}: need {needed} bytes, got {got}")]
    TruncatedPayload {
        field: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown message type {0}")]
    BadType(u8),
    #[error("invalid {field} value {value}")]
    BadEnum { field: &'static str, value: u8 },
    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },
}

pub fn encode(packet: &Packet) -> Vec<u8> {
    let msg_type = packet.body.msg_type();
    let mut out = Vec::with_capacity(HEADER_LEN + msg_type.payload_len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg_type as u8);
    out.push(packet.client_id);
    out.extend_from_slice(&packet.tick.to_le_bytes());
    let put = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&v.to_le_bytes());
    match &packet.body {
        Body::Hello { role } => out.push(role.to_wire()),
        Body::Snapshot(s) => {
            let v = &s.vehicle;
            for x in [v.pose.x, v.pose.y, v.pose.heading, v.speed, v.steer_angle] {
                put(&mut out, x);
            }
            let c = &s.cyclist;
            for x in [
                c.pose.x,
                c.pose.y,
                c.pose.heading,
                c.speed,
                c.lean,
                c.steer_angle,
                c.pedal_power,
                c.brake_force_front,
                c.brake_force_rear,
            ] {
                put(&mut out, x);
            }
            out.push(c.hand_height.to_wire());
            out.push(s.phase.to_wire());
        }
        Body::VehicleInput(cmd) => {
            put(&mut out, cmd.accel_cmd);
            put(&mut out, cmd.steer_cmd);
        }
        Body::RiderInput(r) => {
            for x in [
                r.pedal_power,
                r.brake_front,
                r.brake_rear,
                r.steer_angle,
                r.lean,
            ] {
                put(&mut out, x);
            }
            out.push(r.hand_height.to_wire());
        }
        Body::Bye => {}
    }
    debug_assert_eq!(out.len(), HEADER_LEN + msg_type.payload_len());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn f64(&mut self) -> f64 {
        let v = f64::from_le_bytes(self.buf[self.pos..self.pos + 8].try_into().unwrap());
        self.pos += 8;
        v
    }

    fn u8(&mut self) -> u8 {
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }
}

pub fn decode_header(bytes: &[u8]) -> Result<PacketHeader, DecodeError> {
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::TruncatedPayload {
            field: "header",
            needed: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(DecodeError::BadMagic(magic));
    }
    if bytes[4] != VERSION {
        return Err(DecodeError::BadVersion(bytes[4]));
    }
    let msg_type = MsgType::from_wire(bytes[5]).ok_or(DecodeError::BadType(bytes[5]))?;
    Ok(PacketHeader {
        msg_type,
        client_id: bytes[6],
        tick: u32::from_le_bytes(bytes[7..11].try_into().unwrap()),
    })
}

pub fn decode(bytes: &[u8]) -> Result<Packet, DecodeError> {
    let header = decode_header(bytes)?;
    let needed = HEADER_LEN + header.msg_type.payload_len();
    if bytes.len() < needed {
        return Err(DecodeError::TruncatedPayload {
            field: "payload",
            needed,
            got: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(DecodeError::TrailingBytes {
            extra: bytes.len() - needed,
        });
    }
    let mut r = Reader {
        buf: bytes,
        pos: HEADER_LEN,
    };
    let hand = |b: u8| {
        HandHeight::from_wire(b).ok_or(DecodeError::BadEnum {
            field: "hand_height",
            value: b,
        })
    };
    let body = match header.msg_type {
        MsgType::Hello => {
            let b = r.u8();
            Body::Hello {
                role: ClientRole::from_wire(b).ok_or(DecodeError::BadEnum {
                    field: "role",
                    value: b,
                })?,
            }
        }
        MsgType::SnapshotBroadcast => {
            let vehicle = VehicleKinematics {
                pose: Pose2 {
                    x: r.f64(),
                    y: r.f64(),
                    heading: r.f64(),
                },
                speed: r.f64(),
                steer_angle: r.f64(),
            };
            let pose = Pose2 {
                x: r.f64(),
                y: r.f64(),
                heading: r.f64(),
            };
            let speed = r.f64();
            let lean = r.f64();
            let steer_angle = r.f64();
            let pedal_power = r.f64();
            let brake_force_front = r.f64();
            let brake_force_rear = r.f64();
            let hand_height = hand(r.u8())?;
            let pb = r.u8();
            let phase = ScenarioPhase::from_wire(pb).ok_or(DecodeError::BadEnum {
                field: "scenario_phase",
                value: pb,
            })?;
            Body::Snapshot(SnapshotMsg {
                vehicle,
                cyclist: CyclistState {
                    pose,
                    speed,
                    lean,
                    steer_angle,
                    hand_height,
                    pedal_power,
                    brake_force_front,
                    brake_force_rear,
                },
                phase,
            })
        }
        MsgType::VehicleInput => Body::VehicleInput(VehicleCommand {
            accel_cmd: r.f64(),
            steer_cmd: r.f64(),
        }),
        MsgType::RiderInputMsg => Body::RiderInput(RiderInput {
            pedal_power: r.f64(),
            brake_front: r.f64(),
            brake_rear: r.f64(),
            steer_angle: r.f64(),
            lean: r.f64(),
            hand_height: hand(r.u8())?,
        }),
        MsgType::Bye => Body::Bye,
    };
    Ok(Packet {
        client_id: header.client_id,
        tick: header.tick,
        body,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_snapshot(tick: u32) -> Packet {
        Packet::new(0, tick, Body::Snapshot(SnapshotMsg::default()))
    }

    #[test]
    fn bye_is_header_only() {
        let bytes = encode(&Packet::new(3, 0, Body::Bye));
        assert_eq!(bytes, vec![b'C', b'V', b'I', b'L', 1, 5, 3, 0, 0, 0, 0]);
    }

    #[test]
    fn zero_snapshot_layout() {
        let bytes = encode(&zero_snapshot(7));
        assert_eq!(bytes.len(), 125);
        assert_eq!(&bytes[7..11], &7u32.to_le_bytes());
        // independent layout: 14 reals then two enum bytes
        for (i, b) in bytes[11..11 + 112].iter().enumerate() {
            assert_eq!(*b, 0, "payload byte {i}");
        }
        assert_eq!(bytes[123], HandHeight::Between.to_wire());
        assert_eq!(bytes[124], ScenarioPhase::PreStart.to_wire());
    }

    #[test]
    fn short_input_is_truncated() {
        let bytes = encode(&Packet::new(1, 9, Body::Bye));
        assert!(matches!(
            decode(&bytes[..10]),
            Err(DecodeError::TruncatedPayload { .. })
        ));
        let snap = encode(&zero_snapshot(1));
        for n in HEADER_LEN..snap.len() {
            assert!(matches!(
                decode(&snap[..n]),
                Err(DecodeError::TruncatedPayload { .. })
            ));
        }
    }

    #[test]
    fn unknown_type_rejected() {
        let mut bytes = encode(&Packet::new(1, 9, Body::Bye));
        bytes[5] = 9;
        assert_eq!(decode(&bytes), Err(DecodeError::BadType(9)));
    }

    #[test]
    fn every_magic_byte_checked() {
        let bytes = encode(&zero_snapshot(3));
        for i in 0..4 {
            for flip in [0x01u8, 0x80, 0xff] {
                let mut b = bytes.clone();
                b[i] ^= flip;
                assert!(matches!(decode(&b), Err(DecodeError::BadMagic(_))));
            }
        }
    }

    #[test]
    fn version_checked_before_type() {
        let mut b = encode(&Packet::new(1, 9, Body::Bye));
        b[4] = 2;
        b[5] = 77;
        assert_eq!(decode(&b), Err(DecodeError::BadVersion(2)));
    }

    #[test]
    fn bad_enum_bytes() {
        let mut b = encode(&zero_snapshot(3));
        b[123] = 0;
        assert!(matches!(
            decode(&b),
            Err(DecodeError::BadEnum {
                field: "hand_height",
                ..
            })
        ));
        let mut b = encode(&Packet::new(
            1,
            1,
            Body::Hello {
                role: ClientRole::Observer,
            },
        ));
        b[11] = 9;
        assert!(matches!(
            decode(&b),
            Err(DecodeError::BadEnum { field: "role", .. })
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut b = encode(&Packet::new(1, 1, Body::Bye));
        b.push(0);
        assert_eq!(decode(&b), Err(DecodeError::TrailingBytes { extra: 1 }));
    }

    #[test]
    fn all_datagrams_fit() {
        for t in [
            MsgType::Hello,
            MsgType::SnapshotBroadcast,
            MsgType::VehicleInput,
            MsgType::RiderInputMsg,
            MsgType::Bye,
        ] {
            assert!(HEADER_LEN + t.payload_len() <= MAX_DATAGRAM);
        }
    }
}
