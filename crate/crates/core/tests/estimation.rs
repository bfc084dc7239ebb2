use cvil_core::analysis::{fit_circle, fit_final_lap, Track};
use cvil_core::estimation::*;
use cvil_core::hub::TrajectoryLog;
use cvil_core::scenario::{build_maneuver, run_trial, Maneuver, ManeuverOverrides, TrialPlan};
use cvil_core::{Point2, Pose2};

const L: f64 = 2.8;

fn closed_loop(kind: Maneuver) -> TrajectoryLog {
    let plan = TrialPlan::new(build_maneuver(kind, &ManeuverOverrides::default()));
    run_trial(&plan, 0).unwrap().log
}

fn exact_init(log: &TrajectoryLog) -> EkfEstimate {
    let r = &log.rows[0].veh;
    EkfEstimate::new(0, [r.x, r.y, r.psi, r.v], [1e-6; 4])
}

fn params(sensors: SensorSuiteConfig) -> FilterParams {
    FilterParams::new(L, 90, sensors)
}

#[test]
fn noiseless_reconstruction_is_exact() {
    for kind in [Maneuver::StraightWithStop, Maneuver::DoubleLaneChange] {
        let log = closed_loop(kind);
        let cfg = SensorSuiteConfig::noiseless(90);
        let stream = simulate_sensors(&log, &cfg, L).unwrap();
        let est = reconstruct_trajectory(&stream, exact_init(&log), &params(cfg)).unwrap();
        assert_eq!(est.len(), log.rows.len());
        let worst = est
            .iter()
            .zip(&log.rows)
            .map(|(e, r)| ((e.mean[0] - r.veh.x).powi(2) + (e.mean[1] - r.veh.y).powi(2)).sqrt())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-6, "{kind:?}: worst position error {worst}");
    }
}

#[test]
fn dlc_rmse_p95_over_twenty_seeds() {
    let log = closed_loop(Maneuver::DoubleLaneChange);
    let mut rmse: Vec<f64> = (0..20)
        .map(|seed| {
            let cfg = SensorSuiteConfig::default().with_seed(seed);
            let stream = simulate_sensors(&log, &cfg, L).unwrap();
            let init = initial_estimate(&stream, &cfg).unwrap();
            let est = reconstruct_trajectory(&stream, init, &params(cfg)).unwrap();
            position_rmse(&est, &log)
        })
        .collect();
    rmse.sort_by(f64::total_cmp);
    let p95 = rmse[18];
    println!("DLC RMSE sorted {rmse:?}");
    assert!(p95 <= 0.5, "p95 {p95}");
}

#[test]
fn circle_radius_from_estimates() {
    let log = closed_loop(Maneuver::Circle);
    let truth = fit_final_lap(&log.rows, Track::Vehicle).unwrap().radius;
    let cfg = SensorSuiteConfig::default().with_seed(4);
    let stream = simulate_sensors(&log, &cfg, L).unwrap();
    let est = reconstruct_trajectory(
        &stream,
        initial_estimate(&stream, &cfg).unwrap(),
        &params(cfg),
    )
    .unwrap();
    // same final-lap window as the truth fit
    let lap = cvil_core::analysis::final_lap(&log.rows, Track::Vehicle);
    let first = lap[0];
    let start = log
        .rows
        .iter()
        .position(|r| r.veh.x == first.x && r.veh.y == first.y)
        .unwrap() as u32;
    let pts: Vec<Point2> = est
        .iter()
        .filter(|e| e.tick >= start && log.rows[e.tick as usize].veh.v > 0.0)
        .map(|e| Point2::new(e.mean[0], e.mean[1]))
        .collect();
    let r = fit_circle(&pts).unwrap().radius;
    println!("circle radius truth {truth} estimated {r}");
    assert!((r / truth - 1.0).abs() < 0.02);
}

#[test]
fn innovations_are_consistent() {
    let log = closed_loop(Maneuver::DoubleLaneChange);
    let cfg = SensorSuiteConfig::default().with_seed(1);
    let stream = simulate_sensors(&log, &cfg, L).unwrap();
    let rec = reconstruct_with_diagnostics(
        &stream,
        initial_estimate(&stream, &cfg).unwrap(),
        &params(cfg),
    )
    .unwrap();
    let nis = rec.normalized_nis();
    println!("normalized NIS {nis}");
    assert!((0.7..=1.3).contains(&nis), "NIS {nis}");
}

#[test]
fn cyclist_track_noiseless_and_anchored() {
    let log = closed_loop(Maneuver::StraightWithStop);
    let cfg = SensorSuiteConfig::noiseless(90);
    let stream = simulate_sensors(&log, &cfg, L).unwrap();
    let est = reconstruct_trajectory(&stream, exact_init(&log), &params(cfg)).unwrap();
    let obs = simulate_relative_observations(&log, &cfg).unwrap();
    let b = Point2::new(0.0, 0.0);
    let track = cyclist_global_track(&est, &obs, b).unwrap();
    let g = obs
        .iter()
        .position(|o| o.hand == cvil_core::HandHeight::AboveHead)
        .unwrap();
    assert_eq!(track[g].position, b);
    let worst = track
        .iter()
        .map(|f| {
            let r = &log.rows[f.tick as usize].cyc;
            f.position.distance(&Point2::new(r.x, r.y))
        })
        .fold(0.0f64, f64::max);
    assert!(worst < 1e-6, "worst {worst}");
}

#[test]
fn cyclist_track_rmse_with_noise() {
    let log = closed_loop(Maneuver::StraightWithStop);
    let mut rmse: Vec<f64> = (0..20)
        .map(|seed| {
            let cfg = SensorSuiteConfig::default().with_seed(seed);
            let stream = simulate_sensors(&log, &cfg, L).unwrap();
            let est = reconstruct_smoothed(
                &stream,
                initial_estimate(&stream, &cfg).unwrap(),
                &params(cfg),
            )
            .unwrap();
            let obs = simulate_relative_observations(&log, &cfg).unwrap();
            let track = cyclist_global_track(&est, &obs, Point2::new(0.0, 0.0)).unwrap();
            let se: f64 = track
                .iter()
                .map(|f| {
                    let r = &log.rows[f.tick as usize].cyc;
                    f.position.distance(&Point2::new(r.x, r.y)).powi(2)
                })
                .sum();
            (se / track.len() as f64).sqrt()
        })
        .collect();
    rmse.sort_by(f64::total_cmp);
    println!("cyclist RMSE sorted {rmse:?}");
    assert!(rmse[18] <= 0.6);
}

#[test]
fn estimate_rows_parse_back() {
    let e = EkfEstimate::new(3, [1.0, 2.0, 0.1, 1.2], [0.5, 0.5, 0.1, 0.05]);
    let text = estimates_to_jsonl(&[e]);
    let row: EstimateRow = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(EkfEstimate::from(&row), e);
    let _ = Pose2::new(0.0, 0.0, 0.0);
}
