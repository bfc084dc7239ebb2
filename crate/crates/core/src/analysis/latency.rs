//! Simulated latency bench: a step on one rider channel goes through the
//! injected link and the hub tick, and an unsynchronized camera watches the
//! world for the response.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::SimClock;
use crate::geometry::Pose2;
use crate::hub::{HubConfig, LockstepHub};
use crate::policy::Idle;
use crate::protocol::{ChannelCondition, ChannelError};
use crate::table1::{self, Table1Row};
use crate::world::{CyclistState, HandHeight, RiderInput, VehicleState, WorldSnapshot};

/// Hysteresis band for angle zero-crossings, rad.
pub const CROSSING_BAND: f64 = 1e-3;
/// Give up on a trial after this long, s.
pub const RESPONSE_TIMEOUT: f64 = 10.0;
/// Settling time before the stimulus, s.
const WARMUP: f64 = 1.0;

#[derive(Debug, Error)]
pub enum LatencyError {
    #[error("no response on {channel} within {RESPONSE_TIMEOUT} s (trial {trial})")]
    NoResponse { channel: LatencyChannel, trial: u32 },
    #[error("need at least one trial")]
    NoTrials,
    #[error("sampler rate must be positive")]
    BadSampler,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatencyChannel {
    AvatarGesture,
    Steer,
    Lean,
    BrakeFront,
    BrakeRear,
    Power,
}

impl LatencyChannel {
    pub const ALL: [LatencyChannel; 6] = [
        Self::AvatarGesture,
        Self::Steer,
        Self::Lean,
        Self::BrakeFront,
        Self::BrakeRear,
        Self::Power,
    ];

    /// Row label used in reports.
    pub fn label(self) -> &'static str {
        self.table1_row().label
    }

    pub fn table1_row(self) -> Table1Row {
        match self {
            Self::AvatarGesture => table1::AVATAR_MOTION,
            Self::Steer => table1::STEER,
            Self::Lean => table1::LEAN,
            Self::BrakeFront => table1::BRAKE_FRONT,
            Self::BrakeRear => table1::BRAKE_REAR,
            Self::Power => table1::POWER_STANDSTILL,
        }
    }

    fn baseline(self) -> RiderInput {
        let mut input = RiderInput {
            hand_height: HandHeight::Between,
            ..RiderInput::default()
        };
        match self {
            Self::Steer => input.steer_angle = -0.1,
            Self::Lean => input.lean = -0.05,
            _ => {}
        }
        input
    }

    fn stimulus(self) -> RiderInput {
        let mut input = self.baseline();
        match self {
            Self::AvatarGesture => input.hand_height = HandHeight::AboveHead,
            Self::Steer => input.steer_angle = 0.1,
            Self::Lean => input.lean = 0.05,
            Self::BrakeFront => input.brake_front = 0.5,
            Self::BrakeRear => input.brake_rear = 0.5,
            Self::Power => input.pedal_power = 100.0,
        }
        input
    }

    fn responded(self, c: &CyclistState) -> bool {
        match self {
            Self::AvatarGesture => c.hand_height == HandHeight::AboveHead,
            Self::Steer => c.steer_angle > CROSSING_BAND,
            Self::Lean => c.lean > CROSSING_BAND,
            Self::BrakeFront => c.brake_force_front > 0.0,
            Self::BrakeRear => c.brake_force_rear > 0.0,
            Self::Power => c.pedal_power > 0.0,
        }
    }
}

impl fmt::Display for LatencyChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::AvatarGesture => "avatar",
            Self::Steer => "steer",
            Self::Lean => "lean",
            Self::BrakeFront => "brake-front",
            Self::BrakeRear => "brake-rear",
            Self::Power => "power",
        };
        f.write_str(s)
    }
}

impl FromStr for LatencyChannel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "avatar" | "avatar-gesture" | "gesture" => Ok(Self::AvatarGesture),
            "steer" => Ok(Self::Steer),
            "lean" => Ok(Self::Lean),
            "brake-front" => Ok(Self::BrakeFront),
            "brake-rear" => Ok(Self::BrakeRear),
            "power" => Ok(Self::Power),
            other => Err(format!("unknown latency channel `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub channel: LatencyChannel,
    pub stimulus_time: f64,
    pub response_time: f64,
    /// ms
    pub latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyLabConfig {
    pub n_trials: u32,
    pub sampler_rate: f64,
    pub tick_rate: u32,
    pub seed: u64,
}

impl Default for LatencyLabConfig {
    fn default() -> Self {
        Self {
            n_trials: 10,
            sampler_rate: 240.0,
            tick_rate: crate::clock::DEFAULT_TICK_RATE,
            seed: 0,
        }
    }
}

/// One trial. The stimulus leaves the rider device at a uniformly random
/// time, travels the link, is picked up by the next hub tick and shows in
/// the state that tick computes. The camera runs at its own random phase;
/// stimulus and response are both timestamped on its frame grid.
fn run_trial(
    channel: LatencyChannel,
    injected: &ChannelCondition,
    cfg: &LatencyLabConfig,
    trial: u32,
) -> Result<LatencyRecord, LatencyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let dt = 1.0 / cfg.tick_rate as f64;
    let frame = 1.0 / cfg.sampler_rate;
    let stimulus_at = WARMUP + rng.random_range(0.0..dt);
    let camera_phase = rng.random_range(0.0..frame);

    let hub_cfg = HubConfig {
        tick_rate: cfg.tick_rate,
        snapshot_rate: cfg.tick_rate,
        input_channel: injected.seeded(
            injected
                .seed
                .wrapping_add(cfg.seed)
                .wrapping_add(trial as u64),
        ),
        ..HubConfig::default()
    };
    let pose = Pose2::new(0.0, 0.0, 0.0);
    let initial = WorldSnapshot::new(
        SimClock::new(cfg.tick_rate),
        VehicleState::at_rest(Pose2::new(-10.0, 0.0, 0.0)),
        CyclistState::at_rest(pose),
    );
    let mut hub = LockstepHub::new(hub_cfg, initial)?;
    let baseline = channel.baseline();
    let stimulus = channel.stimulus();

    // frame index on or after a time
    let frame_at = |t: f64| ((t - camera_phase) / frame).ceil().max(0.0);
    let stimulus_frame = frame_at(stimulus_at);
    let deadline = stimulus_at + RESPONSE_TIMEOUT;
    let mut sent = false;
    loop {
        let tick = hub.world().tick();
        let now = hub.world().time();
        if !sent && stimulus_at <= now {
            hub.send_rider_at(stimulus_at, tick, stimulus);
            sent = true;
        }
        hub.send_rider(tick, if sent { stimulus } else { baseline });
        hub.tick(&mut Idle, &mut Idle);
        // state computed at `now` is visible from `now` on
        if sent && channel.responded(&hub.world().cyclist) {
            let response_frame = frame_at(now);
            let response_time = camera_phase + response_frame * frame;
            let stimulus_time = camera_phase + stimulus_frame * frame;
            return Ok(LatencyRecord {
                channel,
                stimulus_time,
                response_time,
                latency: (response_frame - stimulus_frame) * frame * 1000.0,
            });
        }
        if now > deadline {
            return Err(LatencyError::NoResponse { channel, trial });
        }
    }
}

pub fn latency_records(
    channel: LatencyChannel,
    injected: &ChannelCondition,
    cfg: &LatencyLabConfig,
) -> Result<Vec<LatencyRecord>, LatencyError> {
    if cfg.n_trials == 0 {
        return Err(LatencyError::NoTrials);
    }
    if !(cfg.sampler_rate > 0.0) {
        return Err(LatencyError::BadSampler);
    }
    injected.validate()?;
    (0..cfg.n_trials)
        .map(|i| run_trial(channel, injected, cfg, i))
        .collect()
}

pub fn latency_experiment(
    channel: LatencyChannel,
    injected: &ChannelCondition,
    cfg: &LatencyLabConfig,
) -> Result<LatencyStats, LatencyError> {
    let records = latency_records(channel, injected, cfg)?;
    let ms: Vec<f64> = records.iter().map(|r| r.latency).collect();
    Ok(LatencyStats::from_samples(channel.label(), &ms).expect("at least one trial"))
}

/// Summary of one modality, all in ms. `std` is the sample deviation and
/// reads 0 for a single sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub channel: String,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl LatencyStats {
    /// Welford accumulation.
    pub fn from_samples(channel: &str, samples: &[f64]) -> Option<Self> {
        let (&first, _) = samples.split_first()?;
        let (mut mean, mut m2, mut min, mut max) = (0.0, 0.0, first, first);
        for (i, &x) in samples.iter().enumerate() {
            let d = x - mean;
            mean += d / (i + 1) as f64;
            m2 += d * (x - mean);
            min = min.min(x);
            max = max.max(x);
        }
        let n = samples.len();
        let std = if n > 1 {
            (m2 / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            channel: channel.to_string(),
            mean,
            std,
            min,
            max,
            n,
        })
    }

    pub fn from_row(row: &Table1Row, n: usize) -> Self {
        Self {
            channel: row.label.to_string(),
            mean: row.mean,
            std: row.std,
            min: row.min,
            max: row.max,
            n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TICK_MS: f64 = 1000.0 / 90.0;
    const FRAME_MS: f64 = 1000.0 / 240.0;

    #[test]
    fn zero_delay_is_bounded_by_tick_plus_frame() {
        for channel in LatencyChannel::ALL {
            let cfg = LatencyLabConfig {
                n_trials: 30,
                seed: 4,
                ..Default::default()
            };
            for r in latency_records(channel, &ChannelCondition::ideal(), &cfg).unwrap() {
                assert!(
                    r.latency >= 0.0 && r.latency <= TICK_MS + FRAME_MS + 1e-9,
                    "{channel}: {}",
                    r.latency
                );
                assert!(r.response_time >= r.stimulus_time);
            }
        }
    }

    #[test]
    fn latencies_sit_on_the_frame_grid() {
        let cfg = LatencyLabConfig {
            seed: 9,
            ..Default::default()
        };
        for r in latency_records(
            LatencyChannel::Steer,
            &ChannelCondition::with_delay_ms(225.0),
            &cfg,
        )
        .unwrap()
        {
            let frames = r.latency / FRAME_MS;
            assert!((frames - frames.round()).abs() < 1e-6);
        }
    }

    #[test]
    fn reproducible() {
        let cfg = LatencyLabConfig {
            seed: 77,
            ..Default::default()
        };
        let ch = ChannelCondition {
            jitter_ms: 5.0,
            ..ChannelCondition::with_delay_ms(100.0)
        };
        let a = latency_experiment(LatencyChannel::Lean, &ch, &cfg).unwrap();
        let b = latency_experiment(LatencyChannel::Lean, &ch, &cfg).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std.to_bits(), b.std.to_bits());
    }

    #[test]
    fn lost_stimulus_is_no_response() {
        let cfg = LatencyLabConfig {
            n_trials: 1,
            ..Default::default()
        };
        let ch = ChannelCondition {
            drop_probability: 1.0,
            ..ChannelCondition::ideal()
        };
        assert!(matches!(
            latency_experiment(LatencyChannel::Power, &ch, &cfg),
            Err(LatencyError::NoResponse { .. })
        ));
        let none = LatencyLabConfig {
            n_trials: 0,
            ..Default::default()
        };
        assert!(matches!(
            latency_experiment(LatencyChannel::Power, &ChannelCondition::ideal(), &none),
            Err(LatencyError::NoTrials)
        ));
    }

    #[test]
    fn channel_names_roundtrip() {
        for c in LatencyChannel::ALL {
            assert_eq!(c.to_string().parse::<LatencyChannel>().unwrap(), c);
        }
    }

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    proptest! {
        #[test]
        fn welford_matches_two_pass(xs in prop::collection::vec(0.0..3000.0f64, 2..200)) {
            let s = LatencyStats::from_samples("x", &xs).unwrap();
            let (mean, std) = two_pass(&xs);
            prop_assert!((s.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0));
            prop_assert!((s.std - std).abs() <= 1e-9 * std.abs().max(1.0));
            prop_assert!(s.min <= s.mean && s.mean <= s.max);
        }
    }
}
