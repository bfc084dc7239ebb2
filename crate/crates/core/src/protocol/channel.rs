//! Deterministic latency, jitter and loss injection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("delay must be finite and >= 0 ms, got {0}")]
    Delay(f64),
    #[error("jitter must be finite and >= 0 ms, got {0}")]
    Jitter(f64),
    #[error("drop probability must lie in [0, 1], got {0}")]
    DropProbability(f64),
}

/// Transport condition of one simulated link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelCondition {
    #[serde(default)]
    pub delay_ms: f64,
    #[serde(default)]
    pub jitter_ms: f64,
    #[serde(default)]
    pub drop_probability: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ChannelCondition {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ChannelCondition {
    pub const fn ideal() -> Self {
        Self {
            delay_ms: 0.0,
            jitter_ms: 0.0,
            drop_probability: 0.0,
            seed: 0,
        }
    }

    pub fn with_delay_ms(delay_ms: f64) -> Self {
        Self {
            delay_ms,
            ..Self::ideal()
        }
    }

    pub fn seeded(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.delay_ms.is_finite() && self.delay_ms >= 0.0) {
            return Err(ChannelError::Delay(self.delay_ms));
        }
        if !(self.jitter_ms.is_finite() && self.jitter_ms >= 0.0) {
            return Err(ChannelError::Jitter(self.jitter_ms));
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(ChannelError::DropProbability(self.drop_probability));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.delay_ms == 0.0 && self.jitter_ms == 0.0 && self.drop_probability == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delivery {
    At(f64),
    Dropped,
}

/// Decides the fate of one datagram sent at `send_time` seconds.
///
/// Exactly two uniforms are drawn per call (loss, then jitter) so the
/// random stream stays aligned regardless of the outcome.
pub fn channel_deliver<R: Rng + ?Sized>(
    condition: &ChannelCondition,
    send_time: f64,
    rng: &mut R,
) -> Delivery {
    let u_drop: f64 = rng.random();
    let u_jitter: f64 = rng.random();
    if u_drop < condition.drop_probability {
        return Delivery::Dropped;
    }
    let jitter = if condition.jitter_ms > 0.0 {
        u_jitter * condition.jitter_ms
    } else {
        0.0
    };
    Delivery::At(send_time + (condition.delay_ms + jitter) / 1000.0)
}

#[derive(Debug)]
struct InFlight<M> {
    at: f64,
    seq: u64,
    msg: M,
}

impl<M> PartialEq for InFlight<M> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<M> Eq for InFlight<M> {}

impl<M> PartialOrd for InFlight<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M> Ord for InFlight<M> {
    // min-heap on (delivery time, send order)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Single-owner simulated link. Messages with equal delivery time come out
/// in send order.
#[derive(Debug)]
pub struct SimChannel<M> {
    condition: ChannelCondition,
    rng: ChaCha8Rng,
    queue: BinaryHeap<InFlight<M>>,
    next_seq: u64,
    dropped: u64,
}

impl<M> SimChannel<M> {
    pub fn new(condition: ChannelCondition) -> Result<Self, ChannelError> {
        condition.validate()?;
        Ok(Self {
            condition,
            rng: ChaCha8Rng::seed_from_u64(condition.seed),
            queue: BinaryHeap::new(),
            next_seq: 0,
            dropped: 0,
        })
    }

    pub fn condition(&self) -> &ChannelCondition {
        &self.condition
    }

    pub fn send(&mut self, send_time: f64, msg: M) -> Delivery {
        let d = channel_deliver(&self.condition, send_time, &mut self.rng);
        match d {
            Delivery::At(at) => {
                self.queue.push(InFlight {
                    at,
                    seq: self.next_seq,
                    msg,
                });
            }
            Delivery::Dropped => self.dropped += 1,
        }
        self.next_seq += 1;
        d
    }

    /// Removes and returns every message due at or before `now`.
    pub fn poll(&mut self, now: f64) -> Vec<M> {
        let mut out = Vec::new();
        while self.queue.peek().is_some_and(|m| m.at <= now) {
            out.push(self.queue.pop().unwrap().msg);
        }
        out
    }

    pub fn next_delivery(&self) -> Option<f64> {
        self.queue.peek().map(|m| m.at)
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}
