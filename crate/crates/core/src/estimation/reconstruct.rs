//! Offline trajectory reconstruction and cyclist track anchoring.

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Pose2};
use crate::world::HandHeight;

use super::ekf::{
    ekf_predict, ekf_update_with_nis, mat_mul, motion_jacobian, symmetrize, transpose, EkfEstimate,
    Mat4, Measurement,
};
use super::sensors::{RelativeObservation, SensorReading, SensorSample, SensorSuiteConfig};
use super::EstimationError;

/// Measurement variances never go below this, so noiseless streams still
/// give an invertible innovation when a Jacobian row vanishes.
pub const MIN_VARIANCE: f64 = 1e-12;

/// Minimum fix separation used to initialize the heading; widened to
/// `HEADING_BASELINE_SIGMAS` GNSS sigmas so noise around a parked vehicle
/// does not pass for motion.
pub const HEADING_BASELINE: f64 = 0.5;
pub const HEADING_BASELINE_SIGMAS: f64 = 10.0;

pub const P0: [f64; 4] = [1.0, 1.0, 0.3, 0.1];

/// Continuous-time process noise densities, per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessNoise {
    pub position: f64,
    pub heading: f64,
    pub speed: f64,
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self {
            position: 1e-3,
            heading: 1e-4,
            speed: 0.05,
        }
    }
}

impl ProcessNoise {
    pub fn matrix(&self, dt: f64) -> Mat4<f64> {
        let d = [self.position, self.position, self.heading, self.speed];
        let mut q = [[0.0; 4]; 4];
        for i in 0..4 {
            q[i][i] = d[i] * dt;
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub wheelbase: f64,
    pub tick_rate: u32,
    pub process_noise: ProcessNoise,
    pub sensors: SensorSuiteConfig,
}

impl FilterParams {
    pub fn new(wheelbase: f64, tick_rate: u32, sensors: SensorSuiteConfig) -> Self {
        Self {
            wheelbase,
            tick_rate,
            process_noise: ProcessNoise::default(),
            sensors,
        }
    }
}

/// Initial estimate: position from the first fix, heading from the first
/// later fix far enough away, speed from the first wheel
/// sample at or after the first fix.
pub fn initial_estimate(
    stream: &[SensorSample],
    sensors: &SensorSuiteConfig,
) -> Result<EkfEstimate, EstimationError> {
    let baseline = HEADING_BASELINE.max(HEADING_BASELINE_SIGMAS * sensors.gnss.sigma_pos);
    let fixes: Vec<(u32, Point2)> = stream
        .iter()
        .filter_map(|m| match m.reading {
            SensorReading::Gnss { x, y } => Some((m.tick, Point2::new(x, y))),
            _ => None,
        })
        .collect();
    let &(tick, first) = fixes.first().ok_or(EstimationError::NoFix)?;
    let heading = fixes
        .iter()
        .find(|(_, p)| p.distance(&first) >= baseline)
        .map_or(0.0, |(_, p)| (p.y - first.y).atan2(p.x - first.x));
    let v = stream
        .iter()
        .filter(|m| m.tick >= tick)
        .find_map(|m| match m.reading {
            SensorReading::Wheel { v } => Some(v),
            _ => None,
        })
        .unwrap_or(0.0);
    Ok(EkfEstimate::new(tick, [first.x, first.y, heading, v], P0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NisSample {
    pub tick: u32,
    pub nis: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub estimates: Vec<EkfEstimate>,
    pub nis: Vec<NisSample>,
    /// Per step `k -> k+1`: the motion Jacobian and the prediction before
    /// any update at `k+1`.
    steps: Vec<(Mat4<f64>, EkfEstimate)>,
}

fn invert4(m: &Mat4<f64>) -> Option<Mat4<f64>> {
    let mut a = *m;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..4 {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..4 {
            if i != col {
                let f = a[i][col];
                for j in 0..4 {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

impl Reconstruction {
    /// Rauch-Tung-Striebel fixed-interval smoothing of the filtered track.
    pub fn smoothed(&self) -> Result<Vec<EkfEstimate>, EstimationError> {
        let mut out = self.estimates.clone();
        for k in (0..self.steps.len()).rev() {
            let (f, pred) = &self.steps[k];
            let filt = &self.estimates[k];
            let next = out[k + 1];
            let pinv = invert4(&pred.covariance)
                .ok_or(EstimationError::SingularCovariance { tick: pred.tick })?;
            let gain = mat_mul(&mat_mul(&filt.covariance, &transpose(f)), &pinv);
            let mut mean = filt.mean;
            for (i, m) in mean.iter_mut().enumerate() {
                *m += (0..4)
                    .map(|j| gain[i][j] * (next.mean[j] - pred.mean[j]))
                    .sum::<f64>();
            }
            let mut dp = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    dp[i][j] = next.covariance[i][j] - pred.covariance[i][j];
                }
            }
            let corr = mat_mul(&mat_mul(&gain, &dp), &transpose(&gain));
            let mut cov = filt.covariance;
            for i in 0..4 {
                for j in 0..4 {
                    cov[i][j] += corr[i][j];
                }
            }
            out[k] = EkfEstimate {
                tick: filt.tick,
                mean,
                covariance: symmetrize(&cov),
            };
        }
        Ok(out)
    }

    /// Mean NIS divided by the measurement dimension.
    pub fn normalized_nis(&self) -> f64 {
        let dims: usize = self.nis.iter().map(|s| s.dim).sum();
        self.nis.iter().map(|s| s.nis).sum::<f64>() / dims.max(1) as f64
    }
}

/// Runs the filter at the tick rate from `init.tick` to the last sampled
/// tick: predict with the latest steering measurement, then apply every
/// measurement stamped with the tick. Samples older than the filter are
/// dropped.
pub fn reconstruct_with_diagnostics(
    stream: &[SensorSample],
    init: EkfEstimate,
    params: &FilterParams,
) -> Result<Reconstruction, EstimationError> {
    let dt = 1.0 / params.tick_rate as f64;
    let q = params.process_noise.matrix(dt);
    let s = &params.sensors;
    let var = |sigma: f64| (sigma * sigma).max(MIN_VARIANCE);
    let last = stream
        .iter()
        .map(|m| m.tick)
        .max()
        .unwrap_or(init.tick)
        .max(init.tick);
    let mut est = init;
    let mut steer = 0.0;
    let mut estimates = Vec::with_capacity((last - init.tick + 1) as usize);
    let mut nis = Vec::new();
    let mut steps = Vec::new();
    let mut idx = 0;
    for tick in init.tick..=last {
        if tick > init.tick {
            let f = motion_jacobian(&est.mean, steer, params.wheelbase, dt);
            est = ekf_predict(&est, steer, params.wheelbase, &q, dt);
            est.tick = tick;
            steps.push((f, est));
        }
        while idx < stream.len() && stream[idx].tick <= tick {
            let m = &stream[idx];
            idx += 1;
            if m.tick < tick {
                continue;
            }
            let (meas, r) = match m.reading {
                SensorReading::Steer { delta } => {
                    steer = delta;
                    continue;
                }
                SensorReading::Gnss { x, y } => (Measurement::Gnss { x, y }, var(s.gnss.sigma_pos)),
                SensorReading::Wheel { v } => (Measurement::WheelSpeed { v }, var(s.wheel.sigma_v)),
                SensorReading::YawRate { omega } => (
                    Measurement::YawRate {
                        omega,
                        steer,
                        wheelbase: params.wheelbase,
                    },
                    var(s.imu.sigma_yawrate),
                ),
            };
            let up = ekf_update_with_nis(&est, &meas, r)?;
            est = up.estimate;
            nis.push(NisSample {
                tick,
                nis: up.nis,
                dim: up.dim,
            });
        }
        estimates.push(est);
    }
    Ok(Reconstruction {
        estimates,
        nis,
        steps,
    })
}

/// Forward filter followed by the smoothing pass.
pub fn reconstruct_smoothed(
    stream: &[SensorSample],
    init: EkfEstimate,
    params: &FilterParams,
) -> Result<Vec<EkfEstimate>, EstimationError> {
    reconstruct_with_diagnostics(stream, init, params)?.smoothed()
}

pub fn reconstruct_trajectory(
    stream: &[SensorSample],
    init: EkfEstimate,
    params: &FilterParams,
) -> Result<Vec<EkfEstimate>, EstimationError> {
    reconstruct_with_diagnostics(stream, init, params).map(|r| r.estimates)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclistFix {
    pub tick: u32,
    pub position: Point2,
}

/// Places every relative observation in the world through the vehicle
/// estimate of its tick, then translates the whole track so the position at
/// the first raised hand equals `anchor`.
pub fn cyclist_global_track(
    estimates: &[EkfEstimate],
    observations: &[RelativeObservation],
    anchor: Point2,
) -> Result<Vec<CyclistFix>, EstimationError> {
    let first_tick = estimates.first().map_or(0, |e| e.tick);
    let at = |tick: u32| {
        tick.checked_sub(first_tick)
            .and_then(|i| estimates.get(i as usize))
            .filter(|e| e.tick == tick)
    };
    let mut track = Vec::new();
    let mut gesture_at = None;
    for o in observations {
        let Some(e) = at(o.tick) else { continue };
        let pose = Pose2::new(e.mean[0], e.mean[1], e.mean[2]);
        if gesture_at.is_none() && o.hand == HandHeight::AboveHead {
            gesture_at = Some(track.len());
        }
        track.push(CyclistFix {
            tick: o.tick,
            position: pose.compose(o.offset),
        });
    }
    let g = gesture_at.ok_or(EstimationError::NoGestureFound)?;
    let shift = anchor.sub(&track[g].position);
    for fix in &mut track {
        fix.position = fix.position.add(&shift);
    }
    track[g].position = anchor;
    Ok(track)
}

/// One output line: tick, mean and the upper triangle of the covariance
/// in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub tick: u32,
    pub mean: [f64; 4],
    pub cov: [f64; 10],
}

impl From<&EkfEstimate> for EstimateRow {
    fn from(e: &EkfEstimate) -> Self {
        let mut cov = [0.0; 10];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                cov[k] = e.covariance[i][j];
                k += 1;
            }
        }
        Self {
            tick: e.tick,
            mean: e.mean,
            cov,
        }
    }
}

impl From<&EstimateRow> for EkfEstimate {
    fn from(r: &EstimateRow) -> Self {
        let mut covariance = [[0.0; 4]; 4];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                covariance[i][j] = r.cov[k];
                covariance[j][i] = r.cov[k];
                k += 1;
            }
        }
        Self {
            tick: r.tick,
            mean: r.mean,
            covariance,
        }
    }
}

pub fn estimates_to_jsonl(estimates: &[EkfEstimate]) -> String {
    let mut out = String::new();
    for e in estimates {
        out.push_str(&serde_json::to_string(&EstimateRow::from(e)).expect("row serializes"));
        out.push('\n');
    }
    out
}

/// Position RMSE of the estimates against the log rows with the same tick.
pub fn position_rmse(estimates: &[EkfEstimate], truth: &crate::hub::TrajectoryLog) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for e in estimates {
        if let Some(r) = truth.rows.get(e.tick as usize).filter(|r| r.tick == e.tick) {
            sum += (e.mean[0] - r.veh.x).powi(2) + (e.mean[1] - r.veh.y).powi(2);
            n += 1;
        }
    }
    (sum / n.max(1) as f64).sqrt()
}
