//! Reconstructs the vehicle trajectory from simulated onboard sensors.

use std::path::PathBuf;

use anyhow::Result;
use clap::Parser;
use cvil_cli::{init_logging, read_json};
use cvil_core::estimation::{
    estimates_to_jsonl, initial_estimate, position_rmse, reconstruct_with_diagnostics,
    simulate_sensors, FilterParams, SensorSuiteConfig,
};
use cvil_core::hub::TrajectoryLog;

#[derive(Parser)]
#[command(about = "Run the EKF over a ground-truth log")]
struct Args {
    #[arg(long)]
    log: PathBuf,
    /// Sensor suite JSON; defaults when omitted.
    #[arg(long)]
    sensors: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2.8)]
    wheelbase: f64,
    /// Add a backward smoothing pass.
    #[arg(long)]
    smooth: bool,
}

fn main() -> Result<()> {
    init_logging();
    let args = Args::parse();
    let log = TrajectoryLog::read(&args.log)?;
    let mut sensors: SensorSuiteConfig = match &args.sensors {
        Some(p) => read_json(p)?,
        None => SensorSuiteConfig::default(),
    };
    if let Some(s) = args.seed {
        sensors.seed = s;
    }
    let stream = simulate_sensors(&log, &sensors, args.wheelbase)?;
    let init = initial_estimate(&stream, &sensors)?;
    let params = FilterParams::new(args.wheelbase, log.tick_rate(), sensors);
    let rec = reconstruct_with_diagnostics(&stream, init, &params)?;
    let estimates = if args.smooth {
        rec.smoothed()?
    } else {
        rec.estimates.clone()
    };
    std::fs::write(&args.out, estimates_to_jsonl(&estimates))?;
    println!(
        "{} estimates -> {}; position RMSE {:.3} m; normalized NIS {:.3}",
        estimates.len(),
        args.out.display(),
        position_rmse(&estimates, &log),
        rec.normalized_nis()
    );
    Ok(())
}
