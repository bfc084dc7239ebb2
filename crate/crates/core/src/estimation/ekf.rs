//! EKF on the kinematic bicycle, state `[x, y, psi, v]`, steering as control.

use serde::{Deserialize, Serialize};

use crate::num::Real;

use super::EstimationError;

pub type Mat4<T> = [[T; 4]; 4];

pub const X: usize = 0;
pub const Y: usize = 1;
pub const PSI: usize = 2;
pub const V: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EkfEstimate<T = f64> {
    pub tick: u32,
    pub mean: [T; 4],
    pub covariance: Mat4<T>,
}

impl<T: Real> EkfEstimate<T> {
    pub fn new(tick: u32, mean: [T; 4], variances: [T; 4]) -> Self {
        let mut covariance = [[T::zero(); 4]; 4];
        for i in 0..4 {
            covariance[i][i] = variances[i];
        }
        Self {
            tick,
            mean,
            covariance,
        }
    }

    pub fn trace(&self) -> T {
        (0..4).fold(T::zero(), |acc, i| acc + self.covariance[i][i])
    }

    /// Largest `|P - P^T|` entry.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.covariance[i][j] - self.covariance[j][i]).abs());
            }
        }
        worst
    }
}

/// One scalar-or-planar measurement. `YawRate` carries the steering angle
/// and wheelbase its model needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Measurement<T = f64> {
    Gnss { x: T, y: T },
    WheelSpeed { v: T },
    YawRate { omega: T, steer: T, wheelbase: T },
}

impl<T: Real> Measurement<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Gnss { .. } => 2,
            _ => 1,
        }
    }

    pub fn observed(&self) -> Vec<T> {
        match *self {
            Self::Gnss { x, y } => vec![x, y],
            Self::WheelSpeed { v } => vec![v],
            Self::YawRate { omega, .. } => vec![omega],
        }
    }

    /// Predicted measurement `h(mean)`.
    pub fn predict(&self, mean: &[T; 4]) -> Vec<T> {
        match *self {
            Self::Gnss { .. } => vec![mean[X], mean[Y]],
            Self::WheelSpeed { .. } => vec![mean[V]],
            Self::YawRate {
                steer, wheelbase, ..
            } => vec![mean[V] * steer.tan() / wheelbase],
        }
    }

    /// Rows of `dh/dstate`.
    pub fn jacobian(&self, _mean: &[T; 4]) -> Vec<[T; 4]> {
        let (o, z) = (T::one(), T::zero());
        match *self {
            Self::Gnss { .. } => vec![[o, z, z, z], [z, o, z, z]],
            Self::WheelSpeed { .. } => vec![[z, z, z, o]],
            Self::YawRate {
                steer, wheelbase, ..
            } => vec![[z, z, z, steer.tan() / wheelbase]],
        }
    }
}

pub(crate) fn mat_mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut out = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).fold(T::zero(), |acc, k| acc + a[i][k] * b[k][j]);
        }
    }
    out
}

pub(crate) fn transpose<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn symmetrize<T: Real>(p: &Mat4<T>) -> Mat4<T> {
    let mut out = *p;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (p[i][j] + p[j][i]) * T::half();
        }
    }
    out
}

/// Mean propagation of the bicycle with constant speed.
pub fn motion_model<T: Real>(mean: &[T; 4], steer: T, wheelbase: T, dt: T) -> [T; 4] {
    let [x, y, psi, v] = *mean;
    [
        x + v * psi.cos() * dt,
        y + v * psi.sin() * dt,
        psi + v * steer.tan() / wheelbase * dt,
        v,
    ]
}

pub fn motion_jacobian<T: Real>(mean: &[T; 4], steer: T, wheelbase: T, dt: T) -> Mat4<T> {
    let psi = mean[PSI];
    let v = mean[V];
    let mut f = [[T::zero(); 4]; 4];
    for (i, row) in f.iter_mut().enumerate() {
        row[i] = T::one();
    }
    f[X][PSI] = -v * psi.sin() * dt;
    f[X][V] = psi.cos() * dt;
    f[Y][PSI] = v * psi.cos() * dt;
    f[Y][V] = psi.sin() * dt;
    f[PSI][V] = steer.tan() * dt / wheelbase;
    f
}

pub fn ekf_predict<T: Real>(
    est: &EkfEstimate<T>,
    steer: T,
    wheelbase: T,
    q: &Mat4<T>,
    dt: T,
) -> EkfEstimate<T> {
    let f = motion_jacobian(&est.mean, steer, wheelbase, dt);
    let mut p = mat_mul(&mat_mul(&f, &est.covariance), &transpose(&f));
    for i in 0..4 {
        for j in 0..4 {
            p[i][j] = p[i][j] + q[i][j];
        }
    }
    EkfEstimate {
        tick: est.tick,
        mean: motion_model(&est.mean, steer, wheelbase, dt),
        covariance: symmetrize(&p),
    }
}

/// Result of an update with its normalized innovation squared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Updated<T> {
    pub estimate: EkfEstimate<T>,
    pub nis: T,
    pub dim: usize,
}

/// Scalar Joseph-form update, one measurement component.
fn scalar_update<T: Real>(
    est: &mut EkfEstimate<T>,
    innovation: T,
    h: &[T; 4],
    r: T,
) -> Result<T, EstimationError> {
    let p = est.covariance;
    let mut ph = [T::zero(); 4];
    for i in 0..4 {
        ph[i] = (0..4).fold(T::zero(), |acc, k| acc + p[i][k] * h[k]);
    }
    let s = (0..4).fold(T::zero(), |acc, k| acc + h[k] * ph[k]) + r;
    if !(s > T::lit(1e-300)) || !s.is_finite() {
        return Err(EstimationError::SingularInnovation { tick: est.tick });
    }
    let k: [T; 4] = std::array::from_fn(|i| ph[i] / s);
    for i in 0..4 {
        est.mean[i] = est.mean[i] + k[i] * innovation;
    }
    let mut a = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let eye = if i == j { T::one() } else { T::zero() };
            a[i][j] = eye - k[i] * h[j];
        }
    }
    let mut joseph = mat_mul(&mat_mul(&a, &p), &transpose(&a));
    for i in 0..4 {
        for j in 0..4 {
            joseph[i][j] = joseph[i][j] + k[i] * r * k[j];
        }
    }
    est.covariance = symmetrize(&joseph);
    Ok(innovation * innovation / s)
}

/// EKF update with per-component variance `r`. Planar fixes are applied
/// as two sequential scalar updates, which equals the joint update for a
/// diagonal noise matrix; the NIS values add up likewise.
pub fn ekf_update_with_nis<T: Real>(
    est: &EkfEstimate<T>,
    meas: &Measurement<T>,
    r: T,
) -> Result<Updated<T>, EstimationError> {
    let mut out = *est;
    let mut nis = T::zero();
    let z = meas.observed();
    for (i, zi) in z.iter().enumerate() {
        let h = meas.jacobian(&out.mean)[i];
        let innovation = *zi - meas.predict(&out.mean)[i];
        nis = nis + scalar_update(&mut out, innovation, &h, r)?;
    }
    Ok(Updated {
        estimate: out,
        nis,
        dim: meas.dim(),
    })
}

pub fn ekf_update<T: Real>(
    est: &EkfEstimate<T>,
    meas: &Measurement<T>,
    r: T,
) -> Result<EkfEstimate<T>, EstimationError> {
    ekf_update_with_nis(est, meas, r).map(|u| u.estimate)
}
