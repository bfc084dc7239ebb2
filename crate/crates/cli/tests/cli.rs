use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(bin: &str, args: &[&str], cwd: &Path) -> Output {
    let out = Command::new(bin)
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{bin} {args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_estimate_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let script = scenarios().join("straight_stop.json");
    let script = script.to_str().unwrap();
    let out = run(
        env!("CARGO_BIN_EXE_scenario-run"),
        &[
            "--script", script, "--reps", "2", "--seed", "5", "--sigma", "0", "--out", "runs",
        ],
        dir.path(),
    );
    assert_eq!(stdout(&out).matches("Completed").count(), 2);
    let a = "runs/straight_stop_lockstep_rep0_seed5.jsonl";
    let b = "runs/straight_stop_lockstep_rep1_seed6.jsonl";

    let out = run(
        env!("CARGO_BIN_EXE_estimate"),
        &["--log", a, "--out", "est.jsonl", "--seed", "1", "--smooth"],
        dir.path(),
    );
    assert!(stdout(&out).contains("position RMSE"));
    let est = std::fs::read_to_string(dir.path().join("est.jsonl")).unwrap();
    assert!(est.lines().count() > 1000);

    run(
        env!("CARGO_BIN_EXE_analyze"),
        &[
            "compare", "--a", a, "--b", b, "--script", script, "--out", "rep",
        ],
        dir.path(),
    );
    let cmp: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("rep/comparison.json")).unwrap(),
    )
    .unwrap();
    let settle = cmp["a"]["settle_time"]
        .as_f64()
        .expect("settles with exact perception");
    assert!(settle < 30.0);
    for f in ["a_xy.csv", "a_speed.csv", "b_xy.csv", "b_speed.csv"] {
        assert!(dir.path().join("rep").join(f).exists(), "{f}");
    }
}

#[test]
fn latency_report_lists_every_channel() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        env!("CARGO_BIN_EXE_analyze"),
        &[
            "latency",
            "--channel",
            "all",
            "--trials",
            "5",
            "--seed",
            "2",
            "--out",
            "lat",
        ],
        dir.path(),
    );
    let text = stdout(&out);
    assert!(text.starts_with("modality mean std min max\n"));
    assert_eq!(text.lines().count(), 7);
    assert!(dir.path().join("lat/latency.csv").exists());
}

#[test]
fn hub_lockstep_and_idle_realtime() {
    let dir = tempfile::tempdir().unwrap();
    let script = scenarios().join("circle_16p5.json");
    let out = run(
        env!("CARGO_BIN_EXE_hub"),
        &[
            "--script",
            script.to_str().unwrap(),
            "--ticks",
            "450",
            "--log",
            "hub.jsonl",
        ],
        dir.path(),
    );
    assert!(stdout(&out).contains("451 rows"));
    assert!(dir.path().join("hub.jsonl").exists());

    let port = std::net::UdpSocket::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let out = run(
        env!("CARGO_BIN_EXE_hub"),
        &[
            "--mode",
            "realtime",
            "--port",
            &port.to_string(),
            "--ticks",
            "45",
        ],
        dir.path(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report.is_object());
}

#[test]
fn bad_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    let st = Command::new(env!("CARGO_BIN_EXE_analyze"))
        .args(["latency", "--channel", "telepathy"])
        .current_dir(dir.path())
        .output()
        .unwrap()
        .status;
    assert!(!st.success());
    let st = Command::new(env!("CARGO_BIN_EXE_cyclist-agent"))
        .current_dir(dir.path())
        .output()
        .unwrap()
        .status;
    assert!(!st.success());
}

#[test]
fn realtime_hub_with_agent_processes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("rt.json"), r#"{"time_scale": 0.25}"#).unwrap();
    let script = scenarios().join("straight_stop.json");
    let script = script.to_str().unwrap();
    let port = std::net::UdpSocket::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
        .to_string();
    let hub_addr = format!("127.0.0.1:{port}");
    let start = std::time::Instant::now();
    let spawn = |bin: &str, args: &[&str]| {
        Command::new(bin)
            .args(args)
            .current_dir(dir.path())
            .env("RUST_LOG", "warn")
            .stdout(std::process::Stdio::piped())
            .spawn()
            .unwrap()
    };
    let hub = spawn(
        env!("CARGO_BIN_EXE_hub"),
        &[
            "--config", "rt.json", "--mode", "realtime", "--port", &port, "--ticks", "540",
            "--script", script, "--log", "rt.jsonl",
        ],
    );
    std::thread::sleep(std::time::Duration::from_millis(200));
    let vehicle = spawn(
        env!("CARGO_BIN_EXE_vehicle-agent"),
        &["--hub", &hub_addr, "--trace", "trace.jsonl"],
    );
    let cyclist = spawn(
        env!("CARGO_BIN_EXE_cyclist-agent"),
        &["--hub", &hub_addr, "--script", script],
    );
    let hub = hub.wait_with_output().unwrap();
    assert!(hub.status.success());
    assert!(vehicle.wait_with_output().unwrap().status.success());
    assert!(cyclist.wait_with_output().unwrap().status.success());
    // Agents leave on the hub's goodbye rather than their 10 s idle timeout.
    assert!(start.elapsed().as_secs_f64() < 8.0, "{:?}", start.elapsed());

    let report: serde_json::Value = serde_json::from_str(&stdout(&hub)).unwrap();
    assert_eq!(report["ticks"], 540);
    assert_eq!(report["sessions"].as_array().unwrap().len(), 2);
    let rows = std::fs::read_to_string(dir.path().join("rt.jsonl")).unwrap();
    let last: serde_json::Value = serde_json::from_str(rows.lines().last().unwrap()).unwrap();
    assert_eq!(last["phase"], "Running");
    assert!(last["veh"]["v"].as_f64().unwrap() > 0.5);
    let trace = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    assert!(trace.lines().any(|l| l.contains("\"Active\"")));
}
