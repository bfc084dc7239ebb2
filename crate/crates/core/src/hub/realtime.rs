//! Wall-clock hub over UDP. A receive thread decodes datagrams into a
//! queue; the simulation thread owns the world and drains the queue at each
//! tick boundary.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use serde::Serialize;
use thiserror::Error;

use crate::clock::Decimator;
use crate::protocol::{
    decode, encode, Body, ClientRole, FreshnessFilter, Packet, SnapshotMsg, MAX_DATAGRAM,
};
use crate::world::{RiderInput, VehicleCommand, WorldSnapshot};

use super::log::{config_hash, LogMeta, LogRow, TrajectoryLog};
use super::{hub_step, HubConfig};

/// A session not heard from for this long may be replaced.
const SESSION_STALE: Duration = Duration::from_secs(2);
const RECV_POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Error)]
pub enum RealtimeError {
    #[error("cannot bind hub port {port}: {source}")]
    PortBindFailure { port: u16, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Log(#[from] super::LogError),
}

/// Stop switch shared with the running hub.
#[derive(Debug, Clone, Default)]
pub struct HubControl(Arc<AtomicBool>);

impl HubControl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn request_stop(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn stop_requested(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitReport {
    pub ticks: u32,
    pub deadline_misses: u32,
    pub deadline_miss_rate: f64,
    /// Miss rate above the configured threshold.
    pub deadline_miss_rate_exceeded: bool,
    pub ended_by_agent: bool,
    pub malformed_datagrams: u64,
    pub stale_inputs: u64,
    pub sessions: Vec<(u8, ClientRole)>,
}

#[derive(Debug)]
struct Session {
    client_id: u8,
    role: ClientRole,
    fresh: FreshnessFilter,
    last_seen: Instant,
}

struct Inbound {
    from: SocketAddr,
    packet: Packet,
}

pub struct RealtimeHub {
    cfg: HubConfig,
    socket: UdpSocket,
}

impl RealtimeHub {
    /// Binds the hub socket on all interfaces at `cfg.port` (0 picks a port).
    pub fn bind(cfg: HubConfig) -> Result<Self, RealtimeError> {
        Self::bind_addr(cfg.clone(), SocketAddr::from(([0, 0, 0, 0], cfg.port)))
    }

    pub fn bind_addr(cfg: HubConfig, addr: SocketAddr) -> Result<Self, RealtimeError> {
        let socket = UdpSocket::bind(addr).map_err(|source| RealtimeError::PortBindFailure {
            port: addr.port(),
            source,
        })?;
        Ok(Self { cfg, socket })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    /// Runs until an agent leaves, `max_ticks` is reached or `control`
    /// asks to stop.
    pub fn run(
        self,
        initial: WorldSnapshot,
        max_ticks: Option<u32>,
        control: HubControl,
    ) -> Result<(TrajectoryLog, ExitReport), RealtimeError> {
        let cfg = self.cfg;
        let socket = self.socket;
        let recv_socket = socket.try_clone()?;
        recv_socket.set_read_timeout(Some(RECV_POLL))?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::channel();
        let malformed = Arc::new(std::sync::atomic::AtomicU64::new(0));
        let receiver: JoinHandle<()> = {
            let shutdown = shutdown.clone();
            let malformed = malformed.clone();
            thread::spawn(move || {
                let mut buf = [0u8; MAX_DATAGRAM];
                while !shutdown.load(Ordering::SeqCst) {
                    match recv_socket.recv_from(&mut buf) {
                        Ok((n, from)) => match decode(&buf[..n]) {
                            Ok(packet) => {
                                if tx.send(Inbound { from, packet }).is_err() {
                                    break;
                                }
                            }
                            Err(e) => {
                                debug!("malformed datagram from {from}: {e}");
                                malformed.fetch_add(1, Ordering::Relaxed);
                            }
                        },
                        Err(e)
                            if matches!(
                                e.kind(),
                                std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                            ) => {}
                        Err(e) => {
                            debug!("receive error: {e}");
                        }
                    }
                }
            })
        };

        let mut state = HubLoop {
            cfg: &cfg,
            socket: &socket,
            sessions: HashMap::new(),
            vehicle_cmd: VehicleCommand::default(),
            rider_input: RiderInput::default(),
            end_requested: false,
            ended_by_agent: false,
            stale_inputs: 0,
            seen: Vec::new(),
        };
        let result = state.run(initial, max_ticks, &control, &rx);
        shutdown.store(true, Ordering::SeqCst);
        let _ = receiver.join();
        let (log, mut report) = result?;
        report.malformed_datagrams = malformed.load(Ordering::Relaxed);
        Ok((log, report))
    }
}

struct HubLoop<'a> {
    cfg: &'a HubConfig,
    socket: &'a UdpSocket,
    sessions: HashMap<SocketAddr, Session>,
    vehicle_cmd: VehicleCommand,
    rider_input: RiderInput,
    end_requested: bool,
    ended_by_agent: bool,
    stale_inputs: u64,
    seen: Vec<(u8, ClientRole)>,
}

impl HubLoop<'_> {
    fn run(
        &mut self,
        initial: WorldSnapshot,
        max_ticks: Option<u32>,
        control: &HubControl,
        rx: &Receiver<Inbound>,
    ) -> Result<(TrajectoryLog, ExitReport), RealtimeError> {
        let cfg = self.cfg;
        let period = Duration::from_secs_f64(cfg.dt() * cfg.time_scale);
        let decimator = Decimator::new(cfg.tick_rate, cfg.snapshot_rate);
        let mut writer = match &cfg.log_path {
            Some(p) => Some(BufWriter::new(File::create(p)?)),
            None => None,
        };
        let mut world = initial;
        let mut rows = vec![LogRow::from_world(&world)];
        if let Some(w) = writer.as_mut() {
            writeln!(w, "{}", rows[0].to_json())?;
        }
        self.broadcast(&world);

        let start = Instant::now();
        let mut misses = 0u32;
        let mut timed_out = false;
        let mut k: u32 = 0;
        loop {
            if let Some(limit) = max_ticks {
                if world.tick() >= limit && !self.end_requested {
                    timed_out = true;
                    break;
                }
            }
            if control.stop_requested() {
                self.end_requested = true;
            }
            k += 1;
            let deadline = start + period * k;
            let now = Instant::now();
            if deadline > now {
                thread::sleep(deadline - now);
            }
            if Instant::now().saturating_duration_since(deadline) > period / 2 {
                misses += 1;
            }
            while let Ok(msg) = rx.try_recv() {
                self.handle(msg);
            }
            let ending = self.end_requested;
            world = hub_step(
                &world,
                &self.vehicle_cmd,
                &self.rider_input,
                &cfg.vehicle,
                &cfg.cyclist,
                ending,
            );
            let row = LogRow::from_world(&world);
            if let Some(w) = writer.as_mut() {
                writeln!(w, "{}", row.to_json())?;
            }
            rows.push(row);
            if ending || decimator.fires(world.tick()) {
                self.broadcast(&world);
            }
            if ending {
                break;
            }
        }
        if let Some(mut w) = writer {
            w.flush()?;
        }
        if timed_out {
            // Tick cap reached mid-scenario: tell agents instead of letting
            // them wait out their idle timeout.
            let bytes = encode(&Packet::new(0, world.tick(), Body::Bye));
            for addr in self.sessions.keys() {
                let _ = self.socket.send_to(&bytes, addr);
            }
        }
        let ticks = world.tick() - initial.tick();
        let rate = if ticks > 0 {
            misses as f64 / ticks as f64
        } else {
            0.0
        };
        let exceeded = rate > cfg.deadline_miss_threshold;
        if exceeded {
            warn!("deadline-miss rate {:.2}% exceeds threshold", rate * 100.0);
        }
        info!("realtime hub stopped after {ticks} ticks, {misses} deadline misses");
        let meta = LogMeta {
            script: String::new(),
            seed: cfg.seed,
            mode: "realtime".to_string(),
            config_hash: config_hash(cfg),
            tick_rate: cfg.tick_rate,
            timed_out,
            note: None,
        };
        if let Some(p) = &cfg.log_path {
            std::fs::write(
                super::log::meta_path(p),
                serde_json::to_string_pretty(&meta).map_err(super::LogError::from)?,
            )?;
        }
        Ok((
            TrajectoryLog { meta, rows },
            ExitReport {
                ticks,
                deadline_misses: misses,
                deadline_miss_rate: rate,
                deadline_miss_rate_exceeded: exceeded,
                ended_by_agent: self.ended_by_agent,
                malformed_datagrams: 0,
                stale_inputs: self.stale_inputs,
                sessions: self.seen.clone(),
            },
        ))
    }

    fn send(&self, to: SocketAddr, packet: &Packet) {
        if let Err(e) = self.socket.send_to(&encode(packet), to) {
            debug!("send to {to} failed: {e}");
        }
    }

    fn broadcast(&self, world: &WorldSnapshot) {
        let packet = Packet::new(
            0,
            world.tick(),
            Body::Snapshot(SnapshotMsg::from_world(world)),
        );
        let bytes = encode(&packet);
        for addr in self.sessions.keys() {
            if let Err(e) = self.socket.send_to(&bytes, addr) {
                debug!("broadcast to {addr} failed: {e}");
            }
        }
    }

    fn role_holder(&self, role: ClientRole) -> Option<SocketAddr> {
        self.sessions
            .iter()
            .find(|(_, s)| s.role == role)
            .map(|(a, _)| *a)
    }

    fn handle(&mut self, msg: Inbound) {
        let Inbound { from, packet } = msg;
        let now = Instant::now();
        if let Body::Hello { role } = packet.body {
            if matches!(role, ClientRole::VehicleAgent | ClientRole::CyclistAgent) {
                if let Some(other) = self.role_holder(role).filter(|a| *a != from) {
                    if now.duration_since(self.sessions[&other].last_seen) < SESSION_STALE {
                        warn!("rejecting second {role:?} session from {from}");
                        return;
                    }
                    self.sessions.remove(&other);
                }
            }
            if !self.sessions.contains_key(&from) {
                info!("client {} joined as {role:?} from {from}", packet.client_id);
                self.seen.push((packet.client_id, role));
            }
            self.sessions.entry(from).or_insert(Session {
                client_id: packet.client_id,
                role,
                fresh: FreshnessFilter::new(),
                last_seen: now,
            });
            self.sessions.get_mut(&from).unwrap().last_seen = now;
            return;
        }
        let Some(session) = self.sessions.get_mut(&from) else {
            debug!("datagram from unknown peer {from}");
            return;
        };
        session.last_seen = now;
        let role = session.role;
        match packet.body {
            Body::Bye => {
                info!("client {} ({role:?}) left", session.client_id);
                self.sessions.remove(&from);
                if role == ClientRole::CyclistAgent {
                    self.end_requested = true;
                    self.ended_by_agent = true;
                }
            }
            Body::VehicleInput(cmd) if role == ClientRole::VehicleAgent => {
                if session.fresh.accept(packet.tick) {
                    self.vehicle_cmd = cmd;
                } else {
                    self.stale_inputs += 1;
                }
            }
            Body::RiderInput(input) if role == ClientRole::CyclistAgent => {
                if session.fresh.accept(packet.tick) {
                    self.rider_input = input;
                } else {
                    self.stale_inputs += 1;
                }
            }
            Body::RiderInput(input) if role == ClientRole::RiderConsoleGateway => {
                if !session.fresh.accept(packet.tick) {
                    self.stale_inputs += 1;
                    return;
                }
                match self.role_holder(ClientRole::CyclistAgent) {
                    Some(agent) => self.send(agent, &packet),
                    None => self.rider_input = input,
                }
            }
            other => debug!("ignoring {:?} from {role:?}", other.msg_type()),
        }
    }
}

/// Binds, runs and returns the log and exit report.
pub fn run_realtime(
    cfg: &HubConfig,
    initial: WorldSnapshot,
    max_ticks: Option<u32>,
    control: HubControl,
) -> Result<(TrajectoryLog, ExitReport), RealtimeError> {
    RealtimeHub::bind(cfg.clone())?.run(initial, max_ticks, control)
}
