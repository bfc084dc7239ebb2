use std::path::PathBuf;

use cvil_core::scenario::{
    build_maneuver, run_trials, Maneuver, ManeuverOverrides, ManeuverScript, TrialOutcome,
    TrialPlan,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

#[test]
fn shipped_scenarios_match_the_builders() {
    for (file, kind) in [
        ("straight_stop.json", Maneuver::StraightWithStop),
        ("circle_16p5.json", Maneuver::Circle),
        ("dlc.json", Maneuver::DoubleLaneChange),
    ] {
        let loaded = ManeuverScript::load(&fixture(file)).unwrap();
        let built = build_maneuver(kind, &ManeuverOverrides::default());
        assert!(
            (loaded.target_speed - built.target_speed).abs() < 1e-12,
            "{file}"
        );
        assert_eq!(
            ManeuverScript {
                target_speed: built.target_speed,
                ..loaded
            },
            built,
            "{file}"
        );
    }
}

#[test]
fn loaded_scenario_runs_and_writes_logs() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = TrialPlan::new(ManeuverScript::load(&fixture("dlc.json")).unwrap());
    plan.repetitions = 2;
    plan.seed = 5;
    plan.out_dir = Some(dir.path().to_path_buf());
    let results = run_trials(&plan).unwrap();
    assert_eq!(results.len(), 2);
    for r in &results {
        assert_eq!(r.outcome, TrialOutcome::Completed);
        let path = r.log_path.as_ref().unwrap();
        assert!(path.exists());
        let back = cvil_core::hub::TrajectoryLog::read(path).unwrap();
        assert_eq!(back.rows, r.log.rows);
        assert_eq!(back.meta.script, "dlc");
    }
    assert_eq!(results[1].seed, 6);
    assert_ne!(results[0].log.rows, results[1].log.rows);
}
