//! Fixed-step simulation clock and rate decimation.

use serde::{Deserialize, Serialize};

pub const DEFAULT_TICK_RATE: u32 = 90;

/// Tick counter with a fixed rate. Elapsed time is derived from the tick
/// count on every query so it never accumulates rounding drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimClock {
    pub tick: u32,
    pub tick_rate: u32,
}

impl SimClock {
    pub fn new(tick_rate: u32) -> Self {
        assert!(tick_rate > 0, "tick rate must be positive");
        Self { tick: 0, tick_rate }
    }

    pub fn at(tick: u32, tick_rate: u32) -> Self {
        Self { tick, tick_rate }
    }

    pub fn elapsed(&self) -> f64 {
        self.tick as f64 / self.tick_rate as f64
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.tick_rate as f64
    }

    pub fn advanced(&self) -> Self {
        Self {
            tick: self.tick + 1,
            tick_rate: self.tick_rate,
        }
    }

    /// Time of an arbitrary tick at this clock's rate.
    pub fn time_of(&self, tick: u32) -> f64 {
        tick as f64 / self.tick_rate as f64
    }
}

impl Default for SimClock {
    fn default() -> Self {
        Self::new(DEFAULT_TICK_RATE)
    }
}

/// Selects the ticks of a `base_rate` stream that an `out_rate` consumer
/// sees: tick `floor(j * base_rate / out_rate)` for `j = 0, 1, 2, ...`.
///
/// With 90 Hz in and 60 Hz out this yields `0, 1, 3, 4, 6, 7, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimator {
    base_rate: u64,
    out_rate: u64,
}

impl Decimator {
    pub fn new(base_rate: u32, out_rate: u32) -> Self {
        assert!(base_rate > 0 && out_rate > 0 && out_rate <= base_rate);
        Self {
            base_rate: base_rate as u64,
            out_rate: out_rate as u64,
        }
    }

    pub fn fires(&self, tick: u32) -> bool {
        let tick = tick as u64;
        // smallest j with floor(j * base / out) >= tick
        let j = (tick * self.out_rate).div_ceil(self.base_rate);
        (j * self.base_rate) / self.out_rate == tick
    }
}
