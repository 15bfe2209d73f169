use std::path::Path;
use std::process::{Command, Output};

fn shapmat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapmat")).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        "[data]\nsource = \"blobs\"\nclasses = 2\nper_class = 10\n\n[stream]\ntasks = 2\nplayers = 2\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn config_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = shapmat(&["build", "--seed", "1", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[stream]\ntasks = \"many\"\n").unwrap();
    let out = shapmat(&["build", "--seed", "1", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let cfg = write_config(dir.path());
    let out = shapmat(&["build", "--seed", "1", "--config", &cfg, "--anchor-ratio", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_inputs_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.txt");
    let m = missing.to_str().unwrap();
    let out = shapmat(&["eval", "--estimate", m, "--reference", m]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn stream_then_replay_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let out = shapmat(&["stream", "--seed", "4", "--config", &cfg, "--out", first.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["spearman"].is_number());

    let log = first.join("events.jsonl");
    let out = shapmat(&[
        "stream",
        "--seed",
        "4",
        "--config",
        &cfg,
        "--out",
        second.to_str().unwrap(),
        "--replay",
        log.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(first.join("matrix.txt")).unwrap(),
        std::fs::read(second.join("matrix.txt")).unwrap()
    );

    let est = first.join("matrix.txt");
    let out = shapmat(&["eval", "--estimate", est.to_str().unwrap(), "--reference", est.to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["spearman"], 1.0);
}

#[test]
fn synth_writes_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("blobs.csv");
    let out = shapmat(&["synth", "blobs", "--seed", "2", "--per-class", "4", "--out", points.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&points).unwrap();
    assert_eq!(text.lines().count(), 13);

    let nodes = dir.path().join("ring.csv");
    let edges = dir.path().join("edges.csv");
    let out = shapmat(&[
        "synth",
        "ring",
        "--seed",
        "2",
        "--nodes",
        "10",
        "--out",
        nodes.to_str().unwrap(),
        "--edges",
        edges.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&edges).unwrap().starts_with("source,target"));
}

#[test]
fn sweep_prints_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = shapmat(&[
        "sweep", "--seed", "1", "--config", &cfg, "--knob", "interp-k", "--grid", "1,3", "--reference", "none",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}
