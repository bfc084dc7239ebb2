//! Trajectory metrics and run-vs-run comparison against a reference course.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, Point2};
use crate::hub::{LogRow, TrajectoryLog};
use crate::scenario::{ManeuverScript, Path, ScriptError, Segment};
use crate::world::{HandHeight, ScenarioPhase};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("runs use different scripts: `{a}` vs `{b}`")]
    ScriptMismatch { a: String, b: String },
    #[error("circle fit needs at least 3 non-collinear points")]
    DegenerateFit,
    #[error("log is empty")]
    EmptyLog,
    #[error(transparent)]
    Script(#[from] ScriptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

/// Solves a 3x3 system by Cramer's rule.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if !d.is_finite() || d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][k] = b[r];
        }
        *o = det(&m) / d;
    }
    Some(out)
}

/// Algebraic (Kasa) circle fit refined by one Gauss-Newton step on the
/// geometric residuals.
pub fn fit_circle(points: &[Point2]) -> Result<Circle, MetricsError> {
    if points.len() < 3 {
        return Err(MetricsError::DegenerateFit);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    // u^2 + v^2 + D u + E v + F = 0 in centred coordinates
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for p in points {
        let (u, v) = (p.x - mx, p.y - my);
        let row = [u, v, 1.0];
        let rhs = -(u * u + v * v);
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * rhs;
        }
    }
    let [d, e, f] = solve3(ata, atb).ok_or(MetricsError::DegenerateFit)?;
    let (mut cu, mut cv) = (-d / 2.0, -e / 2.0);
    let r2 = cu * cu + cv * cv - f;
    if !(r2 > 0.0) {
        return Err(MetricsError::DegenerateFit);
    }
    let mut r = r2.sqrt();

    let mut jtj = [[0.0; 3]; 3];
    let mut jtr = [0.0; 3];
    for p in points {
        let (du, dv) = (p.x - mx - cu, p.y - my - cv);
        let dist = (du * du + dv * dv).sqrt();
        if dist == 0.0 {
            continue;
        }
        let res = dist - r;
        let jac = [-du / dist, -dv / dist, -1.0];
        for i in 0..3 {
            for j in 0..3 {
                jtj[i][j] += jac[i] * jac[j];
            }
            jtr[i] += jac[i] * res;
        }
    }
    if let Some(step) = solve3(jtj, jtr) {
        cu -= step[0];
        cv -= step[1];
        r -= step[2];
    }
    Ok(Circle {
        center: Point2::new(cu + mx, cv + my),
        radius: r,
    })
}

/// Headings unwrapped into a continuous sequence.
pub fn unwrap_headings(headings: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(headings.len());
    let mut acc = match headings.first() {
        Some(&h) => h,
        None => return out,
    };
    out.push(acc);
    for w in headings.windows(2) {
        acc += normalize_angle(w[1] - w[0]);
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    Vehicle,
    Cyclist,
}

fn pose_of(row: &LogRow, track: Track) -> (Point2, f64, f64) {
    match track {
        Track::Vehicle => (Point2::new(row.veh.x, row.veh.y), row.veh.psi, row.veh.v),
        Track::Cyclist => (Point2::new(row.cyc.x, row.cyc.y), row.cyc.psi, row.cyc.v),
    }
}

/// Moving samples of the last full turn (2 pi of unwrapped heading).
pub fn final_lap(rows: &[LogRow], track: Track) -> Vec<Point2> {
    let mut pts = Vec::new();
    let mut heads = Vec::new();
    for row in rows {
        let (p, psi, _) = pose_of(row, track);
        if pts.last().is_none_or(|q: &Point2| q.distance(&p) > 1e-3) {
            pts.push(p);
            heads.push(psi);
        }
    }
    let unwrapped = unwrap_headings(&heads);
    let Some(&last) = unwrapped.last() else {
        return pts;
    };
    let first = unwrapped.first().copied().unwrap_or(last);
    if (last - first).abs() < TAU {
        return pts;
    }
    let sign = (last - first).signum();
    pts.into_iter()
        .zip(unwrapped)
        .filter(|(_, h)| sign * (last - h) <= TAU)
        .map(|(p, _)| p)
        .collect()
}

pub fn fit_final_lap(rows: &[LogRow], track: Track) -> Result<Circle, MetricsError> {
    fit_circle(&final_lap(rows, track))
}

/// Euclidean vehicle-to-cyclist distance per row.
pub fn gaps(rows: &[LogRow]) -> Vec<f64> {
    rows.iter()
        .map(|r| ((r.veh.x - r.cyc.x).powi(2) + (r.veh.y - r.cyc.y).powi(2)).sqrt())
        .collect()
}

/// Index of the first raised hand.
pub fn first_gesture(rows: &[LogRow]) -> Option<usize> {
    rows.iter()
        .position(|r| r.cyc.hand == HandHeight::AboveHead)
}

/// Rows from the first gesture until the cyclist sets off again after its
/// first stop (or the end of the log).
pub fn first_follow_window(rows: &[LogRow]) -> Option<(usize, usize)> {
    let start = first_gesture(rows)?;
    let mut moved = false;
    let mut stopped = false;
    for (i, r) in rows.iter().enumerate().skip(start) {
        if r.cyc.v > 0.5 {
            moved = true;
        }
        if moved && r.cyc.v == 0.0 {
            stopped = true;
        }
        if stopped && r.cyc.v > 0.0 {
            return Some((start, i));
        }
    }
    Some((start, rows.len()))
}

/// Seconds from the first gesture until `|gap - d_set| < tol` holds for
/// the rest of the first follow window.
pub fn settle_time(rows: &[LogRow], d_set: f64, tol: f64) -> Option<f64> {
    let (start, end) = first_follow_window(rows)?;
    let g = gaps(rows);
    let mut settled_at = None;
    for i in start..end {
        if (g[i] - d_set).abs() < tol {
            settled_at.get_or_insert(i);
        } else {
            settled_at = None;
        }
    }
    settled_at.map(|i| rows[i].t - rows[start].t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub cross_track_rmse: f64,
    pub cross_track_max: f64,
    /// Vehicle speed vs the script target while running.
    pub speed_mae: f64,
    pub path_length: f64,
    pub fitted_radius: Option<f64>,
    pub settle_time: Option<f64>,
}

fn dominant_arc(script: &ManeuverScript, path: &Path) -> bool {
    let arc_len: f64 = script
        .path
        .iter()
        .map(|s| match s {
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
            _ => 0.0,
        })
        .sum();
    arc_len >= 0.5 * path.length()
}

/// Lateral offsets of a track from the course, following the course
/// progressively so multi-lap loops project onto the right lap.
pub fn cross_track(rows: &[LogRow], path: &Path, track: Track) -> Vec<f64> {
    let mut hint: Option<f64> = None;
    rows.iter()
        .map(|r| {
            let (p, _, _) = pose_of(r, track);
            let proj = match hint {
                None => path.project_near(p, 0.0, 5.0),
                Some(s) => path.project_near(p, s, 5.0),
            };
            hint = Some(proj.s);
            proj.lateral
        })
        .collect()
}

pub fn trajectory_metrics(
    log: &TrajectoryLog,
    script: &ManeuverScript,
) -> Result<TrajectoryMetrics, MetricsError> {
    let rows = &log.rows;
    if rows.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let path = script.course()?;
    let lat = cross_track(rows, &path, Track::Vehicle);
    let cross_track_rmse = (lat.iter().map(|e| e * e).sum::<f64>() / lat.len() as f64).sqrt();
    let cross_track_max = lat.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let running: Vec<&LogRow> = rows
        .iter()
        .filter(|r| r.phase == ScenarioPhase::Running)
        .collect();
    let speed_mae = if running.is_empty() {
        0.0
    } else {
        running
            .iter()
            .map(|r| (r.veh.v - script.target_speed).abs())
            .sum::<f64>()
            / running.len() as f64
    };
    let path_length = rows
        .windows(2)
        .map(|w| ((w[1].veh.x - w[0].veh.x).powi(2) + (w[1].veh.y - w[0].veh.y).powi(2)).sqrt())
        .sum();
    let fitted_radius = if dominant_arc(script, &path) {
        Some(fit_final_lap(rows, Track::Vehicle)?.radius)
    } else {
        None
    };
    Ok(TrajectoryMetrics {
        cross_track_rmse,
        cross_track_max,
        speed_mae,
        path_length,
        fitted_radius,
        settle_time: settle_time(rows, crate::scenario::DEFAULT_FOLLOW_DISTANCE, 0.5),
    })
}

/// Signed differences `b - a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDeltas {
    pub cross_track_rmse: f64,
    pub cross_track_max: f64,
    pub speed_mae: f64,
    pub path_length: f64,
    pub fitted_radius: Option<f64>,
    pub settle_time: Option<f64>,
    pub final_dx: f64,
    pub final_dy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: TrajectoryMetrics,
    pub b: TrajectoryMetrics,
    pub deltas: MetricDeltas,
    /// Mean |v_a - v_b| of the vehicle on a common grid aligned at each
    /// run's first gesture.
    pub paired_speed_mae: f64,
}

fn interp(ts: &[f64], vs: &[f64], t: f64) -> f64 {
    match ts.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) => vs[i],
        Err(0) => vs[0],
        Err(i) if i >= ts.len() => vs[ts.len() - 1],
        Err(i) => {
            let w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
            vs[i - 1] + w * (vs[i] - vs[i - 1])
        }
    }
}

fn paired_speed_mae(a: &[LogRow], b: &[LogRow]) -> f64 {
    let offset = |rows: &[LogRow]| first_gesture(rows).map_or(0.0, |i| rows[i].t);
    let (oa, ob) = (offset(a), offset(b));
    let ta: Vec<f64> = a.iter().map(|r| r.t - oa).collect();
    let tb: Vec<f64> = b.iter().map(|r| r.t - ob).collect();
    let va: Vec<f64> = a.iter().map(|r| r.veh.v).collect();
    let vb: Vec<f64> = b.iter().map(|r| r.veh.v).collect();
    let lo = ta[0].max(tb[0]);
    let hi = ta[ta.len() - 1].min(tb[tb.len() - 1]);
    if !(hi > lo) {
        return 0.0;
    }
    let step = 0.01;
    let n = ((hi - lo) / step).floor() as usize + 1;
    (0..n)
        .map(|k| {
            let t = lo + k as f64 * step;
            (interp(&ta, &va, t) - interp(&tb, &vb, t)).abs()
        })
        .sum::<f64>()
        / n as f64
}

pub fn compare_trajectories(
    a: &TrajectoryLog,
    b: &TrajectoryLog,
    script: &ManeuverScript,
) -> Result<Comparison, MetricsError> {
    for log in [a, b] {
        if !log.meta.script.is_empty() && log.meta.script != script.name {
            return Err(MetricsError::ScriptMismatch {
                a: log.meta.script.clone(),
                b: script.name.clone(),
            });
        }
    }
    if !a.meta.script.is_empty() && !b.meta.script.is_empty() && a.meta.script != b.meta.script {
        return Err(MetricsError::ScriptMismatch {
            a: a.meta.script.clone(),
            b: b.meta.script.clone(),
        });
    }
    let ma = trajectory_metrics(a, script)?;
    let mb = trajectory_metrics(b, script)?;
    let opt = |x: Option<f64>, y: Option<f64>| x.zip(y).map(|(x, y)| y - x);
    let (la, lb) = (a.rows.last().unwrap(), b.rows.last().unwrap());
    let deltas = MetricDeltas {
        cross_track_rmse: mb.cross_track_rmse - ma.cross_track_rmse,
        cross_track_max: mb.cross_track_max - ma.cross_track_max,
        speed_mae: mb.speed_mae - ma.speed_mae,
        path_length: mb.path_length - ma.path_length,
        fitted_radius: opt(ma.fitted_radius, mb.fitted_radius),
        settle_time: opt(ma.settle_time, mb.settle_time),
        final_dx: lb.veh.x - la.veh.x,
        final_dy: lb.veh.y - la.veh.y,
    };
    Ok(Comparison {
        a: ma,
        b: mb,
        deltas,
        paired_speed_mae: paired_speed_mae(&a.rows, &b.rows),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimClock;
    use crate::geometry::Pose2;
    use crate::scenario::{build_maneuver, Maneuver, ManeuverOverrides};
    use crate::world::{CyclistState, VehicleState, WorldSnapshot};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn on_circle(n: usize, r: f64, cx: f64, cy: f64, span: f64) -> Vec<Point2> {
        (0..n)
            .map(|i| {
                let a = span * i as f64 / n as f64;
                Point2::new(cx + r * a.cos(), cy + r * a.sin())
            })
            .collect()
    }

    #[test]
    fn exact_circle_fit() {
        let c = fit_circle(&on_circle(500, 16.5, 3.0, -7.0, TAU)).unwrap();
        assert_abs_diff_eq!(c.radius, 16.5, epsilon = 1e-6);
        assert_abs_diff_eq!(c.center.x, 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(c.center.y, -7.0, epsilon = 1e-6);
        let arc = fit_circle(&on_circle(100, 16.5, 0.0, 16.5, 1.0)).unwrap();
        assert_abs_diff_eq!(arc.radius, 16.5, epsilon = 1e-6);
        let line: Vec<Point2> = (0..10).map(|i| Point2::new(i as f64, 0.0)).collect();
        assert!(fit_circle(&line).is_err());
    }

    #[test]
    fn noisy_fit_bias_is_small() {
        let sigma = 0.1;
        let r = 16.5;
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut total = 0.0;
        let seeds = 1000;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point2> = on_circle(200, r, 0.0, r, TAU)
                .into_iter()
                .map(|p| Point2::new(p.x + noise.sample(&mut rng), p.y + noise.sample(&mut rng)))
                .collect();
            total += fit_circle(&pts).unwrap().radius - r;
        }
        let bias = total / seeds as f64;
        assert!(bias.abs() < sigma * sigma / r, "bias {bias}");
    }

    #[test]
    fn unwrap_is_continuous() {
        let h: Vec<f64> = (0..1000)
            .map(|i| normalize_angle(i as f64 * 0.05))
            .collect();
        let u = unwrap_headings(&h);
        assert_abs_diff_eq!(u[999], 999.0 * 0.05, epsilon = 1e-9);
    }

    fn synthetic_circle_log(radius: f64, laps: f64, speed: f64) -> TrajectoryLog {
        let n = (laps * TAU * radius / (speed / 90.0)) as u32;
        let rows = (0..=n)
            .map(|k| {
                let a = speed / 90.0 * k as f64 / radius;
                let pose = Pose2::new(radius * a.sin(), radius - radius * a.cos(), a);
                let mut w = WorldSnapshot::new(
                    SimClock::at(k, 90),
                    VehicleState::at_rest(pose),
                    CyclistState::at_rest(pose),
                );
                w.vehicle.speed = speed;
                w.cyclist.speed = speed;
                LogRow::from_world(&w)
            })
            .collect();
        TrajectoryLog {
            rows,
            ..TrajectoryLog::default()
        }
    }

    #[test]
    fn synthetic_log_on_the_circle() {
        let script = build_maneuver(Maneuver::Circle, &ManeuverOverrides::default());
        let log = synthetic_circle_log(16.5, 2.2, 1.25);
        let m = trajectory_metrics(&log, &script).unwrap();
        assert_abs_diff_eq!(m.fitted_radius.unwrap(), 16.5, epsilon = 1e-6);
        assert!(m.cross_track_max < 1e-6);
        let cmp = compare_trajectories(&log, &log, &script).unwrap();
        assert_eq!(cmp.deltas.cross_track_rmse, 0.0);
        assert_eq!(cmp.deltas.fitted_radius, Some(0.0));
        assert_eq!(cmp.paired_speed_mae, 0.0);
    }

    #[test]
    fn swapping_negates_deltas() {
        let script = build_maneuver(Maneuver::Circle, &ManeuverOverrides::default());
        let a = synthetic_circle_log(16.5, 2.2, 1.25);
        let b = synthetic_circle_log(16.0, 2.2, 1.5);
        let ab = compare_trajectories(&a, &b, &script).unwrap();
        let ba = compare_trajectories(&b, &a, &script).unwrap();
        assert_eq!(ab.deltas.cross_track_rmse, -ba.deltas.cross_track_rmse);
        assert_eq!(
            ab.deltas.fitted_radius.unwrap(),
            -ba.deltas.fitted_radius.unwrap()
        );
        assert_eq!(ab.deltas.final_dx, -ba.deltas.final_dx);
        assert_abs_diff_eq!(ab.paired_speed_mae, ba.paired_speed_mae, epsilon = 1e-12);
        assert!(ab.deltas.fitted_radius.unwrap() < 0.0);
    }

    #[test]
    fn script_mismatch() {
        let script = build_maneuver(Maneuver::Circle, &ManeuverOverrides::default());
        let mut a = synthetic_circle_log(16.5, 1.2, 1.25);
        a.meta.script = "dlc".into();
        let b = synthetic_circle_log(16.5, 1.2, 1.25);
        assert!(matches!(
            compare_trajectories(&a, &b, &script),
            Err(MetricsError::ScriptMismatch { .. })
        ));
    }
}
