//! Cyclist agent process: scripted rider, or relay for console input.

use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Parser;
use cvil_cli::{init_logging, load_script, read_json};
use cvil_core::cyclist::{CyclistParams, RiderGains, ScriptedRider};
use cvil_core::net::{run_external_cyclist_client, run_scripted_cyclist_client, ClientConfig};
use cvil_core::protocol::ClientRole;

#[derive(Parser)]
#[command(about = "Connect a cyclist agent to a realtime hub")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:47900")]
    hub: SocketAddr,
    #[arg(long, default_value_t = 2)]
    id: u8,
    /// Cyclist parameters JSON.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Ride this maneuver script.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Forward rider-console input relayed by the hub instead of a script.
    #[arg(long)]
    external: bool,
    #[arg(long, default_value_t = 90)]
    tick_rate: u32,
}

fn main() -> Result<()> {
    init_logging();
    let args = Args::parse();
    let client = ClientConfig {
        tick_rate: args.tick_rate,
        ..ClientConfig::new(args.hub, args.id, ClientRole::CyclistAgent)
    };
    let params: CyclistParams = match &args.params {
        Some(p) => read_json(p)?,
        None => CyclistParams::default(),
    };
    let report = match (&args.script, args.external) {
        (Some(path), false) => {
            let script = load_script(path)?;
            let mut rider = ScriptedRider::new(&script, params, RiderGains::default())?;
            let report = run_scripted_cyclist_client(&client, &mut rider)?;
            if let Some(e) = rider.error() {
                bail!("rider failed: {e}");
            }
            report
        }
        (None, true) => run_external_cyclist_client(&client, params.lean_limit)?,
        _ => bail!("pass exactly one of --script or --external"),
    };
    log::info!("done: {report:?}");
    Ok(())
}
