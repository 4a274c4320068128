use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use gsicast_core::session::CaptureSession;
use gsicast_sim::{emit_snapshot, SimConfig, SimState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn gsicast(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsicast"))
        .args(args)
        .env("GSICAST_DATA_DIR", data)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn json_out(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

/// Writes `sessions/<id>/session.csv` by feeding simulator snapshots
/// straight into a capture session.
fn offline_session(data: &Path, id: &str, seed: u64, ticks: u64) {
    let cfg = SimConfig {
        seed,
        ticks,
        ..SimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SimState::new(&cfg);
    let mut session = CaptureSession::new(id, data.join("sessions").join(id));
    session.start().unwrap();
    for _ in 0..ticks {
        state.step(&cfg.rates, &mut rng);
        session.handle_post(&emit_snapshot(&state)).unwrap();
    }
    session.stop().unwrap();
}

#[test]
fn three_row_table_gives_two_samples() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    std::fs::write(&csv, "PLAYER.GOLD,A\n600,1\n601,3\n603,2\n").unwrap();
    let out = gsicast(dir.path(), &["build-dataset", "--csv", csv.to_str().unwrap(), "--L", "1", "--d", "1", "--top-k", "2"]);
    let v = json_out(&out);
    assert_eq!(v["samples"], 2);
    assert_eq!(v["width"], 2);
    let x = std::fs::read_to_string(Path::new(v["dir"].as_str().unwrap()).join("X.csv")).unwrap();
    assert_eq!(x.lines().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gsicast(dir.path(), &["train", "--nope"]).status.code(), Some(2));
    assert_eq!(gsicast(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(gsicast(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(gsicast(dir.path(), &["train", "--session", "missing"]).status.code(), Some(3));
    offline_session(dir.path(), "short", 1, 40);
    let out = gsicast(dir.path(), &["train", "--session", "short", "--L", "15", "--d", "20"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("45"));
    assert_eq!(gsicast(dir.path(), &["train", "--session", "short", "--L", "2", "--d", "0"]).status.code(), Some(3));
    assert_eq!(gsicast(dir.path(), &["train", "--session", "short", "--epochs", "0", "--model", "nn"]).status.code(), Some(3));
    assert_eq!(gsicast(dir.path(), &["report", dir.path().join("nothing").to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(gsicast(dir.path(), &["emit-config", "--uri", "http://localhost"]).status.code(), Some(3));
    // Nobody listening: a runtime failure, not a validation error.
    let port = free_port();
    let out = gsicast(dir.path(), &["simulate", "--ticks", "30", "--uri", &format!("http://127.0.0.1:{port}/"), "--speedup", "1000"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn emit_config_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = gsicast(dir.path(), &["emit-config", "--timeout", "5.0"]);
    let b = gsicast(dir.path(), &["emit-config", "--timeout", "5.0"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json_out(&a);
    let text = v["config"].as_str().unwrap();
    assert!(text.contains("\"uri\" \"http://127.0.0.1:8080\""));
    assert!(text.contains("\"timeout\" \"5.0\""));
}

#[test]
fn train_report_and_forecast() {
    let dir = tempfile::tempdir().unwrap();
    offline_session(dir.path(), "m", 3, 400);
    let out_dir = dir.path().join("runs");
    let args = ["train", "--session", "m", "--model", "lr", "--L", "15", "--d", "20", "--top-k", "4", "--out", out_dir.to_str().unwrap()];
    let first = gsicast(dir.path(), &args);
    let report = json_out(&first);
    assert!(report["r2"].is_number());
    assert!(report.get("adjusted_r2").is_some());
    assert!(report["forecast"]["value"].is_number());
    let second = gsicast(dir.path(), &args);
    assert_eq!(first.stdout, second.stdout);

    let run = out_dir.join("lr-L15-d20");
    let shown = json_out(&gsicast(dir.path(), &["report", run.to_str().unwrap()]));
    assert_eq!(shown, report);
    let f = json_out(&gsicast(dir.path(), &["forecast", "--model", run.to_str().unwrap(), "--session", "m"]));
    assert_eq!(f["horizon"], 20);
    assert!((f["value"].as_f64().unwrap() - report["forecast"]["value"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn grid_sweep_gives_eight_rows_per_model() {
    let dir = tempfile::tempdir().unwrap();
    offline_session(dir.path(), "g", 4, 400);
    let out = gsicast(
        dir.path(),
        &["train", "--session", "g", "--model", "lr,nn", "--L", "3", "--grid", "d=30..100:10", "--top-k", "3", "--epochs", "2", "--mlp-hidden", "8"],
    );
    let v = json_out(&out);
    for kind in ["lr", "nn"] {
        let rows = v["table"][kind].as_array().unwrap();
        assert_eq!(rows.len(), 8, "{kind}");
        let ds: Vec<u64> = rows.iter().map(|r| r["horizon"].as_u64().unwrap()).collect();
        assert_eq!(ds, vec![30, 40, 50, 60, 70, 80, 90, 100]);
        assert!(rows.iter().all(|r| r["r2"].is_number() && r["lag"] == 3));
    }
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn wait_healthy(port: u16) {
    let start = Instant::now();
    let url = format!("http://127.0.0.1:{port}/v1/health");
    while reqwest::blocking::get(&url).is_err() {
        assert!(start.elapsed() < Duration::from_secs(20), "server did not come up");
        std::thread::sleep(Duration::from_millis(50));
    }
}

#[test]
fn serve_and_simulate_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let port = free_port();
    let uri = format!("http://127.0.0.1:{port}/");
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_gsicast"))
            .args(["serve", "--uri", &uri])
            .env("GSICAST_DATA_DIR", dir.path())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    wait_healthy(port);
    let summary_path = dir.path().join("sum.json");
    let out = gsicast(
        dir.path(),
        &["simulate", "--seed", "2", "--ticks", "120", "--uri", &uri, "--speedup", "100", "--session", "live", "--summary", summary_path.to_str().unwrap()],
    );
    let summary = json_out(&out);
    assert_eq!(summary["seed"], 2);
    assert_eq!(summary, serde_json::from_str::<Value>(&std::fs::read_to_string(&summary_path).unwrap()).unwrap());
    let info: Value = reqwest::blocking::get(format!("http://127.0.0.1:{port}/v1/sessions/live")).unwrap().json().unwrap();
    assert_eq!(info["state"], "closed");
    assert_eq!(info["rows_written"], summary["gate_passing"]);
}
