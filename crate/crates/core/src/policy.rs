//! Agent policies driven by world snapshots.
//!
//! A policy returns `None` when it has nothing to send this tick; the hub
//! then keeps applying the last accepted input.

use crate::world::{RiderInput, VehicleCommand, WorldSnapshot};

pub trait VehiclePolicy {
    fn command(&mut self, world: &WorldSnapshot) -> Option<VehicleCommand>;
}

pub trait RiderPolicy {
    fn input(&mut self, world: &WorldSnapshot) -> Option<RiderInput>;
}

/// Sends nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Idle;

impl VehiclePolicy for Idle {
    fn command(&mut self, _: &WorldSnapshot) -> Option<VehicleCommand> {
        None
    }
}

impl RiderPolicy for Idle {
    fn input(&mut self, _: &WorldSnapshot) -> Option<RiderInput> {
        None
    }
}

impl<F: FnMut(&WorldSnapshot) -> Option<VehicleCommand>> VehiclePolicy for F {
    fn command(&mut self, world: &WorldSnapshot) -> Option<VehicleCommand> {
        self(world)
    }
}

/// Wraps a closure as a rider policy (closures already implement
/// [`VehiclePolicy`], so the rider side needs a newtype).
pub struct RiderFn<F>(pub F);

impl<F: FnMut(&WorldSnapshot) -> Option<RiderInput>> RiderPolicy for RiderFn<F> {
    fn input(&mut self, world: &WorldSnapshot) -> Option<RiderInput> {
        (self.0)(world)
    }
}
