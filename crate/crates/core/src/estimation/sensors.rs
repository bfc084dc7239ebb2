//! Noisy onboard sensor streams sampled from a ground-truth log.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::clock::Decimator;
use crate::geometry::{Point2, Pose2};
use crate::hub::TrajectoryLog;
use crate::world::HandHeight;

use super::EstimationError;

macro_rules! sensor_cfg {
    ($name:ident, $sigma:ident, $rate:expr, $default:expr) => {
        #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
        #[serde(default)]
        pub struct $name {
            pub rate: u32,
            pub $sigma: f64,
        }

        impl Default for $name {
            fn default() -> Self {
                Self {
                    rate: $rate,
                    $sigma: $default,
                }
            }
        }
    };
}

sensor_cfg!(GnssConfig, sigma_pos, 5, 0.3);
sensor_cfg!(ImuConfig, sigma_yawrate, 90, 0.01);
sensor_cfg!(WheelConfig, sigma_v, 45, 0.05);
sensor_cfg!(SteerConfig, sigma_delta, 45, 0.005);
sensor_cfg!(RelativeConfig, sigma, 90, 0.1);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SensorSuiteConfig {
    pub gnss: GnssConfig,
    pub imu: ImuConfig,
    pub wheel: WheelConfig,
    pub steer_meas: SteerConfig,
    /// Vehicle-frame cyclist offsets standing in for the camera pipeline.
    pub relative: RelativeConfig,
    pub seed: u64,
}

impl SensorSuiteConfig {
    /// Every sensor at the tick rate with zero noise.
    pub fn noiseless(tick_rate: u32) -> Self {
        Self {
            gnss: GnssConfig {
                rate: tick_rate,
                sigma_pos: 0.0,
            },
            imu: ImuConfig {
                rate: tick_rate,
                sigma_yawrate: 0.0,
            },
            wheel: WheelConfig {
                rate: tick_rate,
                sigma_v: 0.0,
            },
            steer_meas: SteerConfig {
                rate: tick_rate,
                sigma_delta: 0.0,
            },
            relative: RelativeConfig {
                rate: tick_rate,
                sigma: 0.0,
            },
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, tick_rate: u32) -> Result<(), EstimationError> {
        let checks = [
            ("gnss", self.gnss.rate, self.gnss.sigma_pos),
            ("imu", self.imu.rate, self.imu.sigma_yawrate),
            ("wheel", self.wheel.rate, self.wheel.sigma_v),
            (
                "steer_meas",
                self.steer_meas.rate,
                self.steer_meas.sigma_delta,
            ),
            ("relative", self.relative.rate, self.relative.sigma),
        ];
        for (name, rate, sigma) in checks {
            if rate == 0 || rate > tick_rate {
                return Err(EstimationError::InvalidConfig(format!(
                    "{name}: rate {rate} Hz must be in 1..={tick_rate}"
                )));
            }
            if !(sigma >= 0.0) {
                return Err(EstimationError::InvalidConfig(format!(
                    "{name}: sigma {sigma} must be >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EstimationError> {
        serde_json::from_str(text).map_err(|e| EstimationError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sensor", rename_all = "snake_case")]
pub enum SensorReading {
    Gnss { x: f64, y: f64 },
    YawRate { omega: f64 },
    Wheel { v: f64 },
    Steer { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub tick: u32,
    pub t: f64,
    #[serde(flatten)]
    pub reading: SensorReading,
}

struct Noise(Option<Normal<f64>>);

impl Noise {
    fn new(sigma: f64) -> Self {
        Self((sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma")))
    }

    fn add(&self, value: f64, rng: &mut ChaCha8Rng) -> f64 {
        match &self.0 {
            Some(n) => value + n.sample(rng),
            None => value,
        }
    }
}

/// Samples each sensor on its decimated tick grid. Within one tick the
/// order is steer, wheel, yaw rate, GNSS.
pub fn simulate_sensors(
    log: &TrajectoryLog,
    cfg: &SensorSuiteConfig,
    wheelbase: f64,
) -> Result<Vec<SensorSample>, EstimationError> {
    if log.rows.is_empty() {
        return Err(EstimationError::EmptyLog);
    }
    let rate = log.tick_rate();
    cfg.validate(rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let steer = (
        Decimator::new(rate, cfg.steer_meas.rate),
        Noise::new(cfg.steer_meas.sigma_delta),
    );
    let wheel = (
        Decimator::new(rate, cfg.wheel.rate),
        Noise::new(cfg.wheel.sigma_v),
    );
    let imu = (
        Decimator::new(rate, cfg.imu.rate),
        Noise::new(cfg.imu.sigma_yawrate),
    );
    let gnss = (
        Decimator::new(rate, cfg.gnss.rate),
        Noise::new(cfg.gnss.sigma_pos),
    );
    let mut out = Vec::new();
    for row in &log.rows {
        let v = &row.veh;
        let mut push = |reading| {
            out.push(SensorSample {
                tick: row.tick,
                t: row.t,
                reading,
            })
        };
        if steer.0.fires(row.tick) {
            push(SensorReading::Steer {
                delta: steer.1.add(v.delta, &mut rng),
            });
        }
        if wheel.0.fires(row.tick) {
            push(SensorReading::Wheel {
                v: wheel.1.add(v.v, &mut rng),
            });
        }
        if imu.0.fires(row.tick) {
            let omega = v.v * v.delta.tan() / wheelbase;
            push(SensorReading::YawRate {
                omega: imu.1.add(omega, &mut rng),
            });
        }
        if gnss.0.fires(row.tick) {
            let x = gnss.1.add(v.x, &mut rng);
            let y = gnss.1.add(v.y, &mut rng);
            push(SensorReading::Gnss { x, y });
        }
    }
    Ok(out)
}

/// The cyclist as seen from the vehicle frame, with the hand state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeObservation {
    pub tick: u32,
    pub offset: Point2,
    pub hand: HandHeight,
}

pub fn simulate_relative_observations(
    log: &TrajectoryLog,
    cfg: &SensorSuiteConfig,
) -> Result<Vec<RelativeObservation>, EstimationError> {
    if log.rows.is_empty() {
        return Err(EstimationError::EmptyLog);
    }
    let rate = log.tick_rate();
    cfg.validate(rate)?;
    // separate stream so the vehicle sensors do not shift with this one
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let dec = Decimator::new(rate, cfg.relative.rate);
    let noise = Noise::new(cfg.relative.sigma);
    Ok(log
        .rows
        .iter()
        .filter(|r| dec.fires(r.tick))
        .map(|r| {
            let pose = Pose2::new(r.veh.x, r.veh.y, r.veh.psi);
            let local = pose.to_local(Point2::new(r.cyc.x, r.cyc.y));
            let ox = noise.add(local.x, &mut rng);
            let oy = noise.add(local.y, &mut rng);
            RelativeObservation {
                tick: r.tick,
                offset: Point2::new(ox, oy),
                hand: r.cyc.hand,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimClock;
    use crate::hub::LogRow;
    use crate::world::{CyclistState, VehicleState, WorldSnapshot};
    use approx::assert_abs_diff_eq;

    fn moving_log(n: u32) -> TrajectoryLog {
        let rows = (0..n)
            .map(|k| {
                let t = k as f64 / 90.0;
                let mut veh = VehicleState::at_rest(Pose2::new(t, 0.5 * t, 0.2));
                veh.speed = 1.0 + 0.1 * t;
                veh.steer_angle = 0.05;
                let cyc = CyclistState::at_rest(Pose2::new(t + 5.0, 0.0, 0.0));
                LogRow::from_world(&WorldSnapshot::new(SimClock::at(k, 90), veh, cyc))
            })
            .collect();
        TrajectoryLog {
            rows,
            ..Default::default()
        }
    }

    #[test]
    fn ten_seconds_of_gnss() {
        let log = moving_log(900);
        let s = simulate_sensors(&log, &SensorSuiteConfig::default(), 2.8).unwrap();
        let count = |f: fn(&SensorReading) -> bool| s.iter().filter(|m| f(&m.reading)).count();
        assert_eq!(count(|r| matches!(r, SensorReading::Gnss { .. })), 50);
        assert_eq!(count(|r| matches!(r, SensorReading::Wheel { .. })), 450);
        assert_eq!(count(|r| matches!(r, SensorReading::YawRate { .. })), 900);
    }

    #[test]
    fn zero_sigma_is_ground_truth() {
        let log = moving_log(300);
        let cfg = SensorSuiteConfig::noiseless(90);
        for m in simulate_sensors(&log, &cfg, 2.8).unwrap() {
            let r = &log.rows[m.tick as usize].veh;
            match m.reading {
                SensorReading::Gnss { x, y } => assert_eq!((x, y), (r.x, r.y)),
                SensorReading::Wheel { v } => assert_eq!(v, r.v),
                SensorReading::Steer { delta } => assert_eq!(delta, r.delta),
                SensorReading::YawRate { omega } => assert_eq!(omega, r.v * r.delta.tan() / 2.8),
            }
        }
        for o in simulate_relative_observations(&log, &cfg).unwrap() {
            let r = &log.rows[o.tick as usize];
            let back = Pose2::new(r.veh.x, r.veh.y, r.veh.psi).compose(o.offset);
            assert_abs_diff_eq!(back.x, r.cyc.x, epsilon = 1e-12);
            assert_abs_diff_eq!(back.y, r.cyc.y, epsilon = 1e-12);
        }
    }

    #[test]
    fn empirical_sigma() {
        // 1e5 steer samples at 90 Hz
        let log = moving_log(100_000);
        let cfg = SensorSuiteConfig {
            steer_meas: SteerConfig {
                rate: 90,
                sigma_delta: 0.005,
            },
            ..SensorSuiteConfig::default()
        }
        .with_seed(7);
        let s = simulate_sensors(&log, &cfg, 2.8).unwrap();
        let errs: Vec<f64> = s
            .iter()
            .filter_map(|m| match m.reading {
                SensorReading::Steer { delta } => Some(delta - log.rows[m.tick as usize].veh.delta),
                _ => None,
            })
            .collect();
        assert_eq!(errs.len(), 100_000);
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let std = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((std / 0.005 - 1.0).abs() < 0.05, "std {std}");
    }

    #[test]
    fn seeded_and_validated() {
        let log = moving_log(200);
        let cfg = SensorSuiteConfig::default().with_seed(3);
        assert_eq!(
            simulate_sensors(&log, &cfg, 2.8).unwrap(),
            simulate_sensors(&log, &cfg, 2.8).unwrap()
        );
        let bad = SensorSuiteConfig {
            gnss: GnssConfig {
                rate: 120,
                sigma_pos: 0.3,
            },
            ..cfg
        };
        assert!(simulate_sensors(&log, &bad, 2.8).is_err());
        let neg = SensorSuiteConfig {
            wheel: WheelConfig {
                rate: 45,
                sigma_v: -1.0,
            },
            ..cfg
        };
        assert!(neg.validate(90).is_err());
    }
}
