#![allow(dead_code)]

use cvil_core::geometry::Pose2;
use cvil_core::protocol::{Body, ClientRole, Packet, SnapshotMsg, VehicleKinematics};
use cvil_core::{CyclistState, HandHeight, RiderInput, ScenarioPhase, VehicleCommand};
use rand::Rng;

/// The datagrams in `fixtures/protocol_golden.bin`, in file order.
pub fn golden_packets() -> Vec<Packet> {
    let zero_snapshot = SnapshotMsg {
        vehicle: VehicleKinematics::default(),
        cyclist: CyclistState::at_rest(Pose2::new(0.0, 0.0, 0.0)),
        phase: ScenarioPhase::PreStart,
    };
    let busy = SnapshotMsg {
        vehicle: VehicleKinematics {
            pose: Pose2::new(12.5, -3.25, 0.5),
            speed: 1.25,
            steer_angle: -0.0625,
        },
        cyclist: CyclistState {
            pose: Pose2::new(17.5, -3.0, 0.25),
            speed: 1.25,
            lean: 0.1,
            steer_angle: 0.0666,
            hand_height: HandHeight::AboveHead,
            pedal_power: 6.116,
            brake_force_front: 125.0,
            brake_force_rear: 62.5,
        },
        phase: ScenarioPhase::Running,
    };
    vec![
        Packet::new(
            1,
            0,
            Body::Hello {
                role: ClientRole::VehicleAgent,
            },
        ),
        Packet::new(0, 7, Body::Snapshot(zero_snapshot)),
        Packet::new(0, 1234, Body::Snapshot(busy)),
        Packet::new(
            1,
            42,
            Body::VehicleInput(VehicleCommand {
                accel_cmd: 0.5,
                steer_cmd: -0.125,
            }),
        ),
        Packet::new(
            2,
            43,
            Body::RiderInput(RiderInput {
                pedal_power: 100.0,
                brake_front: 0.25,
                brake_rear: 0.5,
                steer_angle: 0.0666,
                lean: -0.1222,
                hand_height: HandHeight::BelowShoulder,
            }),
        ),
        Packet::new(3, 0, Body::Bye),
    ]
}

/// Splits the `[u16 LE length][bytes]` records of the golden file.
pub fn golden_records() -> Vec<Vec<u8>> {
    let bytes = include_bytes!("../../fixtures/protocol_golden.bin");
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let len = u16::from_le_bytes([bytes[pos], bytes[pos + 1]]) as usize;
        out.push(bytes[pos + 2..pos + 2 + len].to_vec());
        pos += 2 + len;
    }
    out
}

fn finite<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let v = f64::from_bits(rng.random());
        if v.is_finite() {
            return v;
        }
    }
}

fn hand<R: Rng>(rng: &mut R) -> HandHeight {
    HandHeight::ALL[rng.random_range(0..3)]
}

pub fn random_packet<R: Rng>(rng: &mut R) -> Packet {
    let body = match rng.random_range(0..5) {
        0 => Body::Hello {
            role: [
                ClientRole::VehicleAgent,
                ClientRole::CyclistAgent,
                ClientRole::RiderConsoleGateway,
                ClientRole::Observer,
            ][rng.random_range(0..4)],
        },
        1 => Body::Snapshot(SnapshotMsg {
            vehicle: VehicleKinematics {
                pose: Pose2::new(finite(rng), finite(rng), finite(rng)),
                speed: finite(rng),
                steer_angle: finite(rng),
            },
            cyclist: CyclistState {
                pose: Pose2::new(finite(rng), finite(rng), finite(rng)),
                speed: finite(rng),
                lean: finite(rng),
                steer_angle: finite(rng),
                hand_height: hand(rng),
                pedal_power: finite(rng),
                brake_force_front: finite(rng),
                brake_force_rear: finite(rng),
            },
            phase: [
                ScenarioPhase::PreStart,
                ScenarioPhase::Running,
                ScenarioPhase::Ended,
            ][rng.random_range(0..3)],
        }),
        2 => Body::VehicleInput(VehicleCommand {
            accel_cmd: finite(rng),
            steer_cmd: finite(rng),
        }),
        3 => Body::RiderInput(RiderInput {
            pedal_power: finite(rng),
            brake_front: finite(rng),
            brake_rear: finite(rng),
            steer_angle: finite(rng),
            lean: finite(rng),
            hand_height: hand(rng),
        }),
        _ => Body::Bye,
    };
    Packet::new(rng.random(), rng.random(), body)
}
