//! Vehicle agent process: perception, track-and-follow and actuation.

use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Result;
use clap::Parser;
use cvil_cli::{init_logging, read_json};
use cvil_core::net::{run_vehicle_client, ClientConfig};
use cvil_core::protocol::ClientRole;
use cvil_core::vehicle::{VehicleAgent, VehicleAgentConfig};

#[derive(Parser)]
#[command(about = "Connect a vehicle agent to a realtime hub")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:47900")]
    hub: SocketAddr,
    #[arg(long, default_value_t = 1)]
    id: u8,
    /// Whole agent configuration (params, tff, perception) as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Vehicle parameters, replacing those in `--config`.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Track-and-follow gains and thresholds.
    #[arg(long)]
    tff: Option<PathBuf>,
    /// Simulated operator stop from this time on (s).
    #[arg(long)]
    override_stop_at: Option<f64>,
    /// Controller trace output (JSON Lines).
    #[arg(long, default_value = "controller_trace.jsonl")]
    trace: PathBuf,
    #[arg(long, default_value_t = 90)]
    tick_rate: u32,
    /// Perception noise seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> Result<()> {
    init_logging();
    let args = Args::parse();
    let mut cfg: VehicleAgentConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => VehicleAgentConfig::default(),
    };
    if let Some(p) = &args.params {
        cfg.params = read_json(p)?;
    }
    if let Some(p) = &args.tff {
        cfg.tff = read_json(p)?;
    }
    if args.override_stop_at.is_some() {
        cfg.override_stop_at = args.override_stop_at;
    }
    if let Some(s) = args.seed {
        cfg.perception.seed = s;
    }
    let mut agent = VehicleAgent::new(cfg, args.tick_rate)?;
    let client = ClientConfig {
        tick_rate: args.tick_rate,
        ..ClientConfig::new(args.hub, args.id, ClientRole::VehicleAgent)
    };
    let report = run_vehicle_client(&client, &mut agent)?;
    log::info!("done: {report:?}");
    let mut out = String::new();
    for row in agent.trace() {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    std::fs::write(&args.trace, out)?;
    Ok(())
}
