//! Shared helpers for the command-line tools.

use std::path::Path;

use anyhow::{Context, Result};
use cvil_core::geometry::Pose2;
use cvil_core::hub::HubConfig;
use cvil_core::scenario::ManeuverScript;
use cvil_core::{CyclistState, SimClock, VehicleState, WorldSnapshot};

pub fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
}

pub fn load_hub_config(path: Option<&Path>) -> Result<HubConfig> {
    match path {
        Some(p) => {
            HubConfig::load(p).with_context(|| format!("loading hub config {}", p.display()))
        }
        None => Ok(HubConfig::default()),
    }
}

pub fn load_script(path: &Path) -> Result<ManeuverScript> {
    ManeuverScript::load(path).with_context(|| format!("loading script {}", path.display()))
}

/// Cyclist at the origin and the vehicle 10 m behind, both at rest.
pub fn default_world(tick_rate: u32) -> WorldSnapshot {
    WorldSnapshot::new(
        SimClock::new(tick_rate),
        VehicleState::at_rest(Pose2::new(-10.0, 0.0, 0.0)),
        CyclistState::at_rest(Pose2::new(0.0, 0.0, 0.0)),
    )
}

/// JSON with `_kmh`/`_deg` keys converted to SI.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
