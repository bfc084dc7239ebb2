//! Planar pose algebra.
//!
//! Global frame is east (+x) / north (+y); heading is measured from +x,
//! counterclockwise positive, and always kept in `(-pi, pi]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

/// Minimum separation for which a bearing is defined.
pub const BEARING_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeometryError {
    #[error("target coincides with observer (distance {distance} m)")]
    DegenerateTarget { distance: f64 },
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle<T: Real>(angle: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut r = angle % two_pi;
    if r <= -pi {
        r = r + two_pi;
    } else if r > pi {
        r = r - two_pi;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Rotates counterclockwise by `angle`.
    pub fn rotated(&self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

/// Position and heading in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2<T = f64> {
    pub x: T,
    pub y: T,
    pub heading: T,
}

impl<T: Real> Pose2<T> {
    pub fn new(x: T, y: T, heading: T) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    /// Maps a point given in this pose's body frame (x forward, y left) to
    /// the global frame.
    pub fn compose(&self, offset_local: Point2<T>) -> Point2<T> {
        self.position().add(&offset_local.rotated(self.heading))
    }

    /// Inverse of [`Pose2::compose`]: expresses a global point in the body frame.
    pub fn to_local(&self, global: Point2<T>) -> Point2<T> {
        global.sub(&self.position()).rotated(-self.heading)
    }

    /// Angle of `target` in the body frame: 0 dead ahead, positive to the left.
    pub fn bearing_to(&self, target: Point2<T>) -> Result<T, GeometryError> {
        let local = self.to_local(target);
        let distance = local.norm();
        if distance <= T::lit(BEARING_EPS) {
            return Err(GeometryError::DegenerateTarget {
                distance: distance.to_f64().unwrap_or(0.0),
            });
        }
        Ok(normalize_angle(local.y.atan2(local.x)))
    }

    /// Returns the pose rotated in place by `delta` (heading renormalized).
    pub fn turned(&self, delta: T) -> Self {
        Self::new(self.x, self.y, self.heading + delta)
    }
}

/// Free-function form of [`Pose2::compose`].
pub fn pose_compose<T: Real>(base: &Pose2<T>, offset_local: Point2<T>) -> Point2<T> {
    base.compose(offset_local)
}

/// Free-function form of [`Pose2::bearing_to`].
pub fn bearing_to<T: Real>(observer: &Pose2<T>, target: Point2<T>) -> Result<T, GeometryError> {
    observer.bearing_to(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn rot_oracle(base: (f64, f64, f64), off: (f64, f64)) -> (f64, f64) {
        // explicit 2x2 matrix product
        let m = [[base.2.cos(), -base.2.sin()], [base.2.sin(), base.2.cos()]];
        (
            base.0 + m[0][0] * off.0 + m[0][1] * off.1,
            base.1 + m[1][0] * off.0 + m[1][1] * off.1,
        )
    }

    #[test]
    fn compose_examples() {
        let p = pose_compose(&Pose2::new(0.0, 0.0, 0.0), Point2::new(5.0, 0.0));
        assert_abs_diff_eq!(p.x, 5.0);
        assert_abs_diff_eq!(p.y, 0.0);

        let p = pose_compose(&Pose2::new(0.0, 0.0, FRAC_PI_2), Point2::new(5.0, 0.0));
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 5.0, epsilon = 1e-12);

        let p = pose_compose(&Pose2::new(10.0, -3.0, FRAC_PI_4), Point2::new(2.0, 1.0));
        let (ox, oy) = rot_oracle((10.0, -3.0, FRAC_PI_4), (2.0, 1.0));
        assert_abs_diff_eq!(p.x, ox, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, oy, epsilon = 1e-12);
        assert_abs_diff_eq!(p.x, 10.7071, epsilon = 1e-4);
        assert_abs_diff_eq!(p.y, -0.8787, epsilon = 1e-4);
    }

    #[test]
    fn bearing_examples() {
        let o = Pose2::new(0.0, 0.0, 0.0);
        assert_abs_diff_eq!(o.bearing_to(Point2::new(10.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            o.bearing_to(Point2::new(10.0, 10.0)).unwrap(),
            FRAC_PI_4,
            epsilon = 1e-12
        );
        let o = Pose2::new(5.0, 5.0, FRAC_PI_2);
        assert_abs_diff_eq!(
            o.bearing_to(Point2::new(5.0, 15.0)).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn bearing_degenerate() {
        let o = Pose2::new(1.0, 2.0, 0.3);
        assert!(matches!(
            o.bearing_to(Point2::new(1.0, 2.0)),
            Err(GeometryError::DegenerateTarget { .. })
        ));
    }

    #[test]
    fn normalize_boundaries() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(
            normalize_angle(-FRAC_PI_2 - 2.0 * PI),
            -FRAC_PI_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn works_in_single_precision() {
        let p = Pose2::<f32>::new(10.0, -3.0, std::f32::consts::FRAC_PI_4)
            .compose(Point2::new(2.0, 1.0));
        assert!((p.x - 10.7071).abs() < 1e-4);
        assert!((p.y + 0.8787).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn heading_stays_normalized(h in -100.0f64..100.0, turns in prop::collection::vec(-10.0f64..10.0, 0..20)) {
            let mut p = Pose2::new(0.0, 0.0, h);
            for t in turns {
                p = p.turned(t);
                prop_assert!(p.heading > -PI && p.heading <= PI);
            }
        }

        #[test]
        fn compose_right_identity(x in -1e3f64..1e3, y in -1e3f64..1e3, h in -4.0f64..4.0) {
            let b = Pose2::new(x, y, h);
            let p = b.compose(Point2::new(0.0, 0.0));
            prop_assert_eq!(p, b.position());
        }

        #[test]
        fn bearing_rotation_equivariant(h in -3.0f64..3.0, theta in -3.0f64..3.0, tx in -50.0f64..50.0, ty in -50.0f64..50.0) {
            prop_assume!(tx.hypot(ty) > 1e-3);
            let o = Pose2::new(0.0, 0.0, h);
            let b0 = o.bearing_to(Point2::new(tx, ty)).unwrap();
            let b1 = o.turned(theta).bearing_to(Point2::new(tx, ty)).unwrap();
            let d = normalize_angle(b0 - theta - b1);
            prop_assert!(d.abs() < 1e-9);
        }
    }
}
