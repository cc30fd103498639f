use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn scotsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scotsim"))
        .args(args)
        .env_remove("SCOTSIM_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_fixture(dir: &Path, name: &str) -> String {
    let o = scotsim(&["fixtures", "--name", name]);
    assert!(o.status.success());
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, &o.stdout).unwrap();
    path.display().to_string()
}

#[test]
fn topology_counts_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path(), "fig2");
    let o = scotsim(&["topology", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "18 brokers, 33 links, 3 clusters, 6 regions");
}

#[test]
fn topology_accepts_bare_spec_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("topo.json");
    fs::write(&path, r#"{"af": {"path": 3}, "cf": {"complete": 2}}"#).unwrap();
    let o = scotsim(&["topology", "--config", path.to_str().unwrap(), "--dump"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("6 brokers, 7 links, 2 clusters, 3 regions"), "{text}");
    assert!(text.contains("acols=4 icols=3"), "{text}");
}

#[test]
fn fixtures_list_and_emit() {
    let names = stdout(&scotsim(&["fixtures"]));
    assert!(names.lines().any(|l| l == "fig7-case1"));
    let o = scotsim(&["fixtures", "--name", "fig7-case1"]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["mode"], "dnr");
    assert_eq!(scotsim(&["fixtures", "--name", "nope"]).status.code(), Some(2));
}

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fixture(dir.path(), "fig6");
    let outs: Vec<_> = ["a", "b"].iter().map(|n| dir.path().join(n)).collect();
    for out in &outs {
        let o = scotsim(&["run", "--config", &cfg, "--seed", "1", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("deliveries=8"));
    }
    for file in ["messages.csv", "links.csv", "summary.txt"] {
        assert_eq!(
            fs::read(outs[0].join(file)).unwrap(),
            fs::read(outs[1].join(file)).unwrap()
        );
    }
}

#[test]
fn run_mode_flag_and_env_out() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_scotsim"))
        .args(["run", "--fixture", "fig7-case2", "--mode", "snr", "--trace"])
        .env("SCOTSIM_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let summary = stdout(&o);
    assert!(summary.starts_with("mode=snr\n"));
    assert!(summary.contains("notification_ims=6\n"));
    assert!(summary.contains("compare.dnr.notification_ims=4\n"));
    assert!(dir.path().join("trace.txt").exists());
}

#[test]
fn config_errors_exit_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"schema\": 1,\n  \"mode\": \"fast\"\n}\n").unwrap();
    let o = scotsim(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
}

#[test]
fn usage_errors_exit_nonzero() {
    for args in [&["bogus"][..], &["run", "--fixture", "fig6", "--wat"], &["run"]] {
        let o = scotsim(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"), "{args:?}");
    }
}

#[test]
fn timeout_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = scotsim(&["fixtures", "--name", "stability"]);
    let mut json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    json["max_events"] = 1000.into();
    let path = dir.path().join("short.json");
    fs::write(&path, json.to_string()).unwrap();
    let o = scotsim(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_writes_one_directory_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let args = [
        "sweep",
        "--scenario",
        "publisher-scalability",
        "--divisor",
        "1000",
        "--parallel",
        "2",
        "--out",
        root,
    ];
    for _ in 0..2 {
        assert_eq!(scotsim(&args).status.code(), Some(0));
    }
    let mut dirs: Vec<_> = fs::read_dir(dir.path().join("publisher-scalability"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    dirs.sort();
    assert_eq!(dirs.len(), 10);
    assert!(dirs.contains(&"publishers-100-2".to_string()));
    assert_eq!(scotsim(&["sweep", "--scenario", "nope"]).status.code(), Some(2));
}
