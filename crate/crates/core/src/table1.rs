//! Bench latency figures per sensing modality, in milliseconds.
//!
//! Used as injectable channel presets and as report formatting fixtures;
//! they are measurements of a physical bench, not outputs of this model.

use crate::protocol::ChannelCondition;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub label: &'static str,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

const fn row(label: &'static str, mean: f64, std: f64, min: f64, max: f64) -> Table1Row {
    Table1Row {
        label,
        mean,
        std,
        min,
        max,
    }
}

pub const AVATAR_MOTION: Table1Row = row("avatar motion", 138.0, 52.7, 75.0, 196.0);
pub const AVATAR_UPWARD: Table1Row = row("avatar motion (upward)", 89.0, 11.3, 75.0, 100.0);
pub const AVATAR_DOWNWARD: Table1Row = row("avatar motion (downward)", 188.0, 8.3, 175.0, 196.0);
pub const STEER: Table1Row = row("steer", 225.0, 23.2, 188.0, 263.0);
pub const LEAN: Table1Row = row("lean", 243.0, 71.4, 125.0, 354.0);
pub const BRAKE_FRONT: Table1Row = row("brake force front", 198.0, 18.3, 158.0, 217.0);
pub const BRAKE_REAR: Table1Row = row("brake force rear", 210.0, 24.4, 167.0, 250.0);
pub const POWER_STANDSTILL: Table1Row =
    row("power (from standstill)", 1492.0, 298.3, 1163.0, 2029.0);
pub const POWER_MOVING: Table1Row = row("power (from movement)", 1345.0, 68.4, 1204.0, 1425.0);

/// Single-value rows in table order.
pub const ROWS: [Table1Row; 6] = [
    AVATAR_MOTION,
    STEER,
    LEAN,
    BRAKE_FRONT,
    BRAKE_REAR,
    POWER_STANDSTILL,
];

impl Table1Row {
    /// Constant-delay channel reproducing this row's mean latency.
    pub fn channel(&self) -> ChannelCondition {
        ChannelCondition::with_delay_ms(self.mean)
    }
}

/// Looks up a named preset such as `table1-steer` or `table1-power`.
pub fn preset(name: &str) -> Option<ChannelCondition> {
    let row = match name {
        "ideal" => return Some(ChannelCondition::ideal()),
        "table1-avatar" => AVATAR_MOTION,
        "table1-avatar-up" => AVATAR_UPWARD,
        "table1-avatar-down" => AVATAR_DOWNWARD,
        "table1-steer" => STEER,
        "table1-lean" => LEAN,
        "table1-brake-front" => BRAKE_FRONT,
        "table1-brake-rear" => BRAKE_REAR,
        "table1-power" | "table1-power-standstill" => POWER_STANDSTILL,
        "table1-power-moving" => POWER_MOVING,
        _ => return None,
    };
    Some(row.channel())
}
