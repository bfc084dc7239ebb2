//! Plot-ready CSV columns for trajectory and speed figures.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::hub::TrajectoryLog;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes `{prefix}_xy.csv` (vehicle and cyclist x,y) and
/// `{prefix}_speed.csv` (t and both speeds) into `dir`.
pub fn write_plot_csvs(
    dir: &Path,
    prefix: &str,
    log: &TrajectoryLog,
) -> Result<Vec<PathBuf>, PlotError> {
    std::fs::create_dir_all(dir)?;
    let xy = dir.join(format!("{prefix}_xy.csv"));
    let mut w = csv::Writer::from_path(&xy)?;
    w.write_record(["veh_x", "veh_y", "cyc_x", "cyc_y"])?;
    for r in &log.rows {
        w.serialize((r.veh.x, r.veh.y, r.cyc.x, r.cyc.y))?;
    }
    w.flush()?;
    let speed = dir.join(format!("{prefix}_speed.csv"));
    let mut w = csv::Writer::from_path(&speed)?;
    w.write_record(["t", "veh_v", "cyc_v"])?;
    for r in &log.rows {
        w.serialize((r.t, r.veh.v, r.cyc.v))?;
    }
    w.flush()?;
    Ok(vec![xy, speed])
}
