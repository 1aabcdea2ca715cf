use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn uavedge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uavedge"))
        .current_dir(dir)
        .env_remove("UAVEDGE_SEED")
        .env_remove("UAVEDGE_OUT_DIR")
        .env_remove("UAVEDGE_WORKERS")
        .env_remove("UAVEDGE_ITERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = uavedge(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

const FAST: [&str; 6] = ["--warmup", "32", "--buffer", "1000", "--target-sync", "50"];

#[test]
fn generate_is_reproducible_and_applies_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--seed", "7", "--power", "8", "--comm", "8", "-o", "a.json"]);
    ok(d, &["generate", "--seed", "7", "--power", "8", "--comm", "8", "-o", "b.json"]);
    assert_eq!(read(d.join("a.json")), read(d.join("b.json")));
    let s = json(d.join("a.json"));
    let devices = s["devices"].as_array().unwrap();
    assert_eq!(devices.len(), 12);
    let without = |key: &str| devices.iter().filter(|x| x[key] == Value::Bool(false)).count();
    assert_eq!(without("has_power"), 4);
    assert_eq!(without("has_comm"), 4);
    assert_eq!(json(d.join("manifest.json"))["command"], "generate");
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = uavedge(d, &["generate", "--power", "13", "--comm", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = uavedge(d, &["train", "-s", "x.json", "--reward", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("U_logAoverO") && err.contains("neglogO"), "{err}");
    assert_eq!(uavedge(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(uavedge(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = uavedge(d, &["train", "-s", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(d.join("bad.json"), "{\"devices\": 3}").unwrap();
    assert_eq!(uavedge(d, &["eval", "-s", "bad.json", "--policy", "random"]).status.code(), Some(2));
}

#[test]
fn baseline_and_full_support_rollouts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--power", "0", "--comm", "0", "-o", "none.json"]);
    let out = ok(d, &["eval", "-s", "none.json", "--policy", "round_robin"]);
    assert!(out.starts_with("length=11 cause=DataExpired"), "{out}");
    ok(d, &["generate", "--power", "12", "--comm", "12", "-o", "full.json"]);
    let out = ok(d, &["eval", "-s", "full.json", "--policy", "oldest_data_first"]);
    assert!(out.contains("cause=UavBatteryDepleted first_failure=none"), "{out}");
    let trace = read(d.join("trace.csv"));
    assert!(trace.starts_with("slot,action,served,"));
    assert!(trace.trim_end().ends_with("UavBatteryDepleted"));
    assert_eq!(read(d.join("eval.csv")).lines().count(), 2);
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--power", "8", "--comm", "8", "-o", "s.json"]);
    let mut args = vec!["--out-dir", "run", "train", "-s", "s.json", "--iters", "600"];
    args.extend(FAST);
    ok(d, &args);
    let m = json(d.join("run/manifest.json"));
    assert_eq!(m["config"]["train"]["gamma"], 0.98);
    assert_eq!(m["config"]["train"]["learning_rate"], 0.0071);
    assert_eq!(m["config"]["train"]["batch_size"], 16);
    assert_eq!(m["config"]["reward"]["id"], "U_logAoverO");
    assert_eq!(m["artifacts"].as_array().unwrap().len(), 2);
    let w = json(d.join("run/weights.json"));
    assert_eq!(w["layer_sizes"], serde_json::json!([24, 64, 64, 12]));
    assert!(read(d.join("run/train_log.csv")).starts_with("episode,end_iteration,length,mean_loss,epsilon\n"));
    let out = ok(d, &["--out-dir", "ev", "eval", "-s", "s.json", "--weights", "run/weights.json"]);
    assert!(out.starts_with("length="), "{out}");

    // a network for 12 devices cannot drive a 6-device scenario
    ok(d, &["generate", "--devices", "6", "--power", "3", "--comm", "3", "-o", "six.json"]);
    let out = uavedge(d, &["eval", "-s", "six.json", "--weights", "run/weights.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("12 devices"));
}

#[test]
fn sweep_output_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut base = vec!["sweep", "--grid", "12,4", "--seeds", "2", "--iters", "200"];
    base.extend(FAST);
    let mut one = vec!["--out-dir", "w1", "--workers", "1"];
    one.extend(&base);
    let mut three = vec!["--out-dir", "w3", "--workers", "3"];
    three.extend(&base);
    ok(d, &one);
    ok(d, &three);
    for f in ["sweep.csv", "sweep_table.csv"] {
        assert_eq!(read(d.join("w1").join(f)), read(d.join("w3").join(f)), "{f}");
    }
    let runs = read(d.join("w1/sweep.csv"));
    assert!(runs.starts_with("power,comm,seed,length,cause,first_failure\n"));
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 2);
    assert_eq!(read(d.join("w1/sweep_table.csv")).lines().next().unwrap(), "power,comm_12,comm_4");
}

#[test]
fn failstats_with_priorities() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("d.csv"), "segment_id,x,y,mean_density\ne1,100,200,35.5\ne2,600,600,10\n").unwrap();
    let mut args = vec![
        "--out-dir", "fs", "--workers", "2", "failstats", "--runs", "3", "--power-out", "4", "--comm-out", "6",
        "--priority-file", "d.csv", "--iters", "200",
    ];
    args.extend(FAST);
    ok(d, &args);
    let tally = read(d.join("fs/tally.csv"));
    assert_eq!(tally.lines().count(), 13);
    assert!(tally.starts_with("device_id,failure_count\n"));
    let m = json(d.join("fs/manifest.json"));
    assert_eq!(m["seeds"], serde_json::json!([0, 1, 2]));
    assert_eq!(m["config"]["priority_weights"].as_array().unwrap().len(), 12);

    let out = uavedge(d, &["failstats", "--power-out", "13"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn environment_overrides_global_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--seed", "5", "generate", "--power", "6", "--comm", "6", "-o", "flag.json"]);
    let out = Command::new(env!("CARGO_BIN_EXE_uavedge"))
        .current_dir(d)
        .env("UAVEDGE_SEED", "5")
        .env("UAVEDGE_OUT_DIR", "envdir")
        .args(["generate", "--power", "6", "--comm", "6", "-o", "flag.json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read(d.join("flag.json")), read(d.join("envdir/flag.json")));
}
