//! Authoritative hub, lockstep or realtime over UDP.

use std::path::PathBuf;

use anyhow::Result;
use clap::Parser;
use cvil_cli::{default_world, init_logging, load_hub_config, load_script};
use cvil_core::cyclist::ScriptedRider;
use cvil_core::hub::{run_lockstep, HubControl, HubMode, RealtimeHub};
use cvil_core::policy::Idle;
use cvil_core::scenario::initial_world;
use cvil_core::vehicle::{VehicleAgent, VehicleAgentConfig};

#[derive(Parser)]
#[command(about = "Run the simulation hub")]
struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<HubMode>,
    /// Stop after this many ticks (realtime runs until an agent leaves otherwise).
    #[arg(long)]
    ticks: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    port: Option<u16>,
    /// Trajectory log output (JSONL, plus a .meta.json sidecar).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Start poses from this script; in lockstep also runs the built-in
    /// vehicle agent and scripted rider in-process.
    #[arg(long)]
    script: Option<PathBuf>,
}

fn main() -> Result<()> {
    init_logging();
    let args = Args::parse();
    let mut cfg = load_hub_config(args.config.as_deref())?;
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = args.port {
        cfg.port = p;
    }
    if args.log.is_some() {
        cfg.log_path = args.log.clone();
    }
    cfg.validate()?;
    let script = args.script.as_deref().map(load_script).transpose()?;
    let initial = match &script {
        Some(s) => initial_world(s, cfg.tick_rate),
        None => default_world(cfg.tick_rate),
    };
    match cfg.mode {
        HubMode::Lockstep => {
            let ticks = args.ticks.unwrap_or(cfg.tick_rate * 10);
            let log = match &script {
                Some(s) => {
                    let mut agent = VehicleAgent::new(
                        VehicleAgentConfig {
                            params: cfg.vehicle,
                            ..VehicleAgentConfig::default()
                        },
                        cfg.tick_rate,
                    )?;
                    let mut rider = ScriptedRider::new(s, cfg.cyclist, Default::default())?;
                    run_lockstep(&cfg, initial, &mut agent, &mut rider, ticks)?
                }
                None => run_lockstep(&cfg, initial, &mut Idle, &mut Idle, ticks)?,
            };
            println!("{} ticks, {} rows", ticks, log.rows.len());
        }
        HubMode::Realtime => {
            let hub = RealtimeHub::bind(cfg)?;
            log::info!("listening on {}", hub.local_addr()?);
            let (log, report) = hub.run(initial, args.ticks, HubControl::new())?;
            log::info!("{} rows logged", log.rows.len());
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}
