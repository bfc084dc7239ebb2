//! Latency lab and trajectory comparison reports.

use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use cvil_cli::{init_logging, load_script};
use cvil_core::analysis::{
    compare_trajectories, latency_experiment, table1_report, write_plot_csvs, LatencyChannel,
    LatencyLabConfig,
};
use cvil_core::hub::TrajectoryLog;
use cvil_core::protocol::ChannelCondition;

#[derive(Parser)]
#[command(about = "Evaluate latency and trajectories")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Measure injected latency on one channel (or `all`).
    Latency {
        #[arg(long, default_value = "steer")]
        channel: String,
        /// `table1` injects the bench figure for the channel, `ideal` none.
        #[arg(long, default_value = "table1")]
        preset: String,
        /// Explicit delay, overrides the preset.
        #[arg(long)]
        delay_ms: Option<f64>,
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 240.0)]
        sampler_rate: f64,
        /// Directory for latency.txt and latency.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two runs of the same script.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    init_logging();
    match Args::parse().cmd {
        Cmd::Latency {
            channel,
            preset,
            delay_ms,
            trials,
            seed,
            sampler_rate,
            out,
        } => {
            let channels: Vec<LatencyChannel> = if channel == "all" {
                LatencyChannel::ALL.to_vec()
            } else {
                vec![channel.parse().map_err(|e: String| anyhow!(e))?]
            };
            let cfg = LatencyLabConfig {
                n_trials: trials,
                sampler_rate,
                seed,
                ..Default::default()
            };
            let mut stats = Vec::new();
            for ch in channels {
                let injected = match (delay_ms, preset.as_str()) {
                    (Some(d), _) => ChannelCondition::with_delay_ms(d),
                    (None, "table1") => ch.table1_row().channel(),
                    (None, "ideal") => ChannelCondition::ideal(),
                    (None, other) => return Err(anyhow!("unknown preset `{other}`")),
                };
                stats.push(latency_experiment(ch, &injected, &cfg)?);
            }
            let report = table1_report(&stats)?;
            print!("{}", report.text);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("latency.txt"), &report.text)?;
                std::fs::write(dir.join("latency.csv"), &report.csv)?;
            }
        }
        Cmd::Compare { a, b, script, out } => {
            let script = load_script(&script)?;
            let (la, lb) = (TrajectoryLog::read(&a)?, TrajectoryLog::read(&b)?);
            let cmp = compare_trajectories(&la, &lb, &script)?;
            let json = serde_json::to_string_pretty(&cmp)?;
            println!("{json}");
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("comparison.json"), &json)?;
            write_plot_csvs(&out, "a", &la)?;
            write_plot_csvs(&out, "b", &lb)?;
        }
    }
    Ok(())
}
