//! Emulated camera perception: ground truth gated by field of view and
//! range, with seeded Gaussian position noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::clock::Decimator;
use crate::geometry::Point2;
use crate::num::Real;
use crate::protocol::{ChannelCondition, ChannelError, SimChannel};
use crate::world::{HandHeight, WorldSnapshot};

/// Angular slack when testing the FOV boundary, absorbs atan2 rounding.
const FOV_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    pub sample_rate: u32,
    pub fov_half_angle: f64,
    pub max_range: f64,
    pub position_noise_sigma: f64,
    pub detection_latency: ChannelCondition,
    pub seed: u64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            sample_rate: 20,
            fov_half_angle: 0.87,
            max_range: 40.0,
            position_noise_sigma: 0.1,
            detection_latency: ChannelCondition::ideal(),
            seed: 0,
        }
    }
}

impl PerceptionConfig {
    pub fn noiseless() -> Self {
        Self {
            position_noise_sigma: 0.0,
            ..Self::default()
        }
    }
}

/// What the planner gets from the perception stack: the target's position
/// in the vehicle frame and two hand predicates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation<T = f64> {
    pub tick_observed: u32,
    pub relative_position: Point2<T>,
    pub hand_above_head: bool,
    pub hand_below_shoulder: bool,
    pub valid: bool,
}

impl<T: Real> Observation<T> {
    pub fn new(tick: u32, relative_position: Point2<T>, hand: HandHeight) -> Self {
        Self {
            tick_observed: tick,
            relative_position,
            hand_above_head: hand == HandHeight::AboveHead,
            hand_below_shoulder: hand == HandHeight::BelowShoulder,
            valid: true,
        }
    }

    pub fn range(&self) -> T {
        self.relative_position.norm()
    }
}

/// Samples the cyclist as seen from the vehicle. `None` when the cyclist is
/// outside the FOV cone (boundary inclusive) or beyond `max_range`.
///
/// Two standard normals are drawn on every call, detected or not.
pub fn sense<R: rand::Rng + ?Sized>(
    world: &WorldSnapshot,
    cfg: &PerceptionConfig,
    rng: &mut R,
) -> Option<Observation> {
    let nx: f64 = StandardNormal.sample(rng);
    let ny: f64 = StandardNormal.sample(rng);
    let rel = world.vehicle.pose.to_local(world.cyclist.pose.position());
    let range = rel.norm();
    if range > cfg.max_range || range <= crate::geometry::BEARING_EPS {
        return None;
    }
    let bearing = rel.y.atan2(rel.x);
    if bearing.abs() > cfg.fov_half_angle + FOV_EPS {
        return None;
    }
    let sigma = cfg.position_noise_sigma;
    let noisy = Point2::new(rel.x + sigma * nx, rel.y + sigma * ny);
    Some(Observation::new(
        world.tick(),
        noisy,
        world.cyclist.hand_height,
    ))
}

/// Chooses the nearest valid candidate as the tracking target.
pub fn select_target<T: Real>(candidates: &[Observation<T>]) -> Option<Observation<T>> {
    candidates
        .iter()
        .filter(|o| o.valid)
        .min_by(|a, b| {
            a.range()
                .partial_cmp(&b.range())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .copied()
}

/// The full sensing pipeline: sample decimation, detection, and delivery
/// through a simulated detection-latency channel.
#[derive(Debug)]
pub struct Perception {
    cfg: PerceptionConfig,
    rng: ChaCha8Rng,
    decimator: Decimator,
    channel: SimChannel<Observation>,
}

impl Perception {
    pub fn new(cfg: PerceptionConfig, tick_rate: u32) -> Result<Self, ChannelError> {
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            decimator: Decimator::new(tick_rate, cfg.sample_rate.min(tick_rate)),
            channel: SimChannel::new(cfg.detection_latency)?,
            cfg,
        })
    }

    pub fn config(&self) -> &PerceptionConfig {
        &self.cfg
    }

    /// Feeds one world tick; returns the newest observation delivered by
    /// now, if any.
    pub fn observe(&mut self, world: &WorldSnapshot) -> Option<Observation> {
        let now = world.time();
        if self.decimator.fires(world.tick()) {
            let candidates: Vec<Observation> =
                sense(world, &self.cfg, &mut self.rng).into_iter().collect();
            if let Some(target) = select_target(&candidates) {
                self.channel.send(now, target);
            }
        }
        self.channel.poll(now).into_iter().last()
    }
}
