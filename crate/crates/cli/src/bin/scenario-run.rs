//! Runs repetitions of a maneuver script and writes one log per run.

use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::Parser;
use cvil_cli::{init_logging, load_hub_config, load_script};
use cvil_core::hub::HubMode;
use cvil_core::scenario::{run_trial, TrialOutcome, TrialPlan};
use cvil_core::table1;

#[derive(Parser)]
#[command(about = "Run a maneuver script against the vehicle agent")]
struct Args {
    #[arg(long)]
    script: PathBuf,
    #[arg(long, default_value = "lockstep")]
    mode: HubMode,
    #[arg(long, default_value_t = 2)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Input link: ideal, table1-steer, table1-power, ...
    #[arg(long, default_value = "ideal")]
    channel_preset: String,
    /// Hub configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Perception position noise (m); 0 for exact detections.
    #[arg(long)]
    sigma: Option<f64>,
    /// Per-run timeout in simulated seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

fn main() -> Result<()> {
    init_logging();
    let args = Args::parse();
    let mut plan = TrialPlan::new(load_script(&args.script)?);
    plan.mode = args.mode;
    plan.repetitions = args.reps;
    plan.seed = args.seed;
    plan.hub = load_hub_config(args.config.as_deref())?;
    plan.channel = table1::preset(&args.channel_preset)
        .ok_or_else(|| anyhow!("unknown channel preset `{}`", args.channel_preset))?;
    if let Some(sigma) = args.sigma {
        plan.vehicle.perception.position_noise_sigma = sigma;
    }
    if let Some(t) = args.timeout {
        plan.timeout = t;
    }
    plan.out_dir = Some(args.out.clone());
    plan.validate()?;
    let mut failures = 0;
    for rep in 0..plan.repetitions {
        let r = run_trial(&plan, rep)?;
        let path = r
            .log_path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        println!(
            "rep {rep} seed {} {:?} {} rows -> {path}",
            r.seed,
            r.outcome,
            r.log.rows.len()
        );
        if r.outcome != TrialOutcome::Completed {
            failures += 1;
        }
    }
    if failures > 0 {
        std::process::exit(2);
    }
    Ok(())
}
