//! Agent-side UDP runtime: join the hub, react to snapshots, send inputs.

use std::net::{SocketAddr, UdpSocket};
use std::time::{Duration, Instant};

use log::{debug, info};

use crate::clock::DEFAULT_TICK_RATE;
use crate::protocol::{decode, encode, Body, ClientRole, FreshnessFilter, Packet, MAX_DATAGRAM};
use crate::world::{RiderInput, ScenarioPhase, WorldSnapshot};

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub hub: SocketAddr,
    pub client_id: u8,
    pub role: ClientRole,
    pub tick_rate: u32,
    /// Give up after this long without a snapshot.
    pub idle_timeout: Duration,
    pub hello_interval: Duration,
}

impl ClientConfig {
    pub fn new(hub: SocketAddr, client_id: u8, role: ClientRole) -> Self {
        Self {
            hub,
            client_id,
            role,
            tick_rate: DEFAULT_TICK_RATE,
            idle_timeout: Duration::from_secs(10),
            hello_interval: Duration::from_millis(100),
        }
    }
}

/// What the hub sent us.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Incoming {
    Snapshot(WorldSnapshot),
    /// Rider input relayed from a rider-console gateway.
    Relay(RiderInput),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentAction {
    Send(Body),
    Nothing,
    /// Send `Bye` and stop.
    Leave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClientReport {
    pub snapshots: u64,
    pub sent: u64,
    pub stale: u64,
    pub saw_end: bool,
    /// The hub stopped before the scenario ended.
    pub hub_left: bool,
    pub timed_out: bool,
}

/// Runs until the scenario ends, the handler leaves, or the hub leaves or
/// goes quiet.
/// Inputs carry the tick of the snapshot they answer.
pub fn run_client<F>(cfg: &ClientConfig, mut handler: F) -> std::io::Result<ClientReport>
where
    F: FnMut(Incoming) -> AgentAction,
{
    let socket = UdpSocket::bind(SocketAddr::from(([0, 0, 0, 0], 0)))?;
    socket.connect(cfg.hub)?;
    socket.set_read_timeout(Some(cfg.hello_interval))?;
    let send = |body: Body, tick: u32| -> std::io::Result<()> {
        socket.send(&encode(&Packet::new(cfg.client_id, tick, body)))?;
        Ok(())
    };
    send(Body::Hello { role: cfg.role }, 0)?;
    let mut report = ClientReport::default();
    let mut fresh = FreshnessFilter::new();
    let mut last_heard = Instant::now();
    let mut last_hello = Instant::now();
    let mut buf = [0u8; MAX_DATAGRAM];
    loop {
        let n = match socket.recv(&mut buf) {
            Ok(n) => n,
            Err(e)
                if matches!(
                    e.kind(),
                    std::io::ErrorKind::WouldBlock
                        | std::io::ErrorKind::TimedOut
                        | std::io::ErrorKind::ConnectionRefused
                ) =>
            {
                if last_heard.elapsed() > cfg.idle_timeout {
                    report.timed_out = true;
                    return Ok(report);
                }
                if report.snapshots == 0 && last_hello.elapsed() >= cfg.hello_interval {
                    let _ = send(Body::Hello { role: cfg.role }, 0);
                    last_hello = Instant::now();
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let packet = match decode(&buf[..n]) {
            Ok(p) => p,
            Err(e) => {
                debug!("dropping malformed datagram: {e}");
                continue;
            }
        };
        last_heard = Instant::now();
        let (incoming, tick) = match packet.body {
            Body::Snapshot(msg) => {
                if !fresh.accept(packet.tick) {
                    report.stale += 1;
                    continue;
                }
                report.snapshots += 1;
                let world = msg.into_world(packet.tick, cfg.tick_rate);
                if world.scenario_phase == ScenarioPhase::Ended {
                    info!("scenario ended at tick {}", packet.tick);
                    report.saw_end = true;
                    return Ok(report);
                }
                (Incoming::Snapshot(world), packet.tick)
            }
            Body::RiderInput(input) => (Incoming::Relay(input), fresh.last_accepted().unwrap_or(0)),
            Body::Bye => {
                info!("hub left at tick {}", packet.tick);
                report.hub_left = true;
                return Ok(report);
            }
            _ => continue,
        };
        match handler(incoming) {
            AgentAction::Send(body) => {
                send(body, tick)?;
                report.sent += 1;
            }
            AgentAction::Nothing => {}
            AgentAction::Leave => {
                send(Body::Bye, tick)?;
                return Ok(report);
            }
        }
    }
}

/// Drives a vehicle agent from hub snapshots.
pub fn run_vehicle_client(
    cfg: &ClientConfig,
    agent: &mut crate::vehicle::VehicleAgent,
) -> std::io::Result<ClientReport> {
    run_client(cfg, |incoming| match incoming {
        Incoming::Snapshot(world) => AgentAction::Send(Body::VehicleInput(agent.step(&world))),
        Incoming::Relay(_) => AgentAction::Nothing,
    })
}

/// Drives a scripted rider; leaves once the final stop gesture is done.
pub fn run_scripted_cyclist_client(
    cfg: &ClientConfig,
    rider: &mut crate::cyclist::ScriptedRider,
) -> std::io::Result<ClientReport> {
    run_client(cfg, |incoming| match incoming {
        Incoming::Snapshot(world) => match rider.step(&world) {
            Ok(input) if rider.finished() && input.hand_height != crate::HandHeight::AboveHead => {
                AgentAction::Leave
            }
            Ok(input) => AgentAction::Send(Body::RiderInput(input)),
            Err(e) => {
                log::error!("{e}");
                AgentAction::Leave
            }
        },
        Incoming::Relay(_) => AgentAction::Nothing,
    })
}

/// Forwards the latest relayed console input on every snapshot
/// (hold-last-value between console frames).
pub fn run_external_cyclist_client(
    cfg: &ClientConfig,
    lean_limit: f64,
) -> std::io::Result<ClientReport> {
    let mut latest: Option<RiderInput> = None;
    run_client(cfg, |incoming| match incoming {
        Incoming::Relay(input) => {
            latest = Some(input.sanitized(lean_limit));
            AgentAction::Nothing
        }
        Incoming::Snapshot(_) => match latest {
            Some(input) => AgentAction::Send(Body::RiderInput(input)),
            None => AgentAction::Nothing,
        },
    })
}
