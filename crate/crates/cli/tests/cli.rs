use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn brw(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brw"))
        .args(args)
        .current_dir(cwd)
        .env_remove("BRW_THREADS")
        .output()
        .expect("brw runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = brw(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("simulate-resistance"));
}

#[test]
fn survival_prints_the_ratio_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = brw(&["survival", "--n", "1,2,3,1000"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,theta,ratio"));
    assert_eq!(lines.next(), Some("1,0.5,0.25"));
    assert_eq!(lines.next(), Some("2,0.375,0.375"));
    let last: Vec<f64> = lines.nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((0.9..=1.1).contains(&last[2]), "{last:?}");
    let out = dir.path().join("brw-runs/survival");
    for f in ["survival.csv", "config.txt", "manifest.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

#[test]
fn unknown_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = brw(&["survival", "--bogus", "3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["simulate-resistance", "--d", "0"][..],
        &["volume", "--n", "64,32"],
        &["blocks", "--delta", "0.4"],
        &["simulate-resistance", "--reps", "many"],
    ] {
        let o = brw(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
}

#[test]
fn missing_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = brw(&["volume", "--config", "nope.txt"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "simulate-resistance".to_string(),
            "--n".into(),
            "8,16".into(),
            "--reps".into(),
            "12".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            out.into(),
        ]
    };
    for out in ["a", "b"] {
        let a = args(out);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = brw(&refs, dir.path());
        assert_eq!(o.status.code(), Some(0), "{o:?}");
    }
    for f in ["records.csv", "summary.csv", "fits.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn saved_config_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = brw(
        &["volume", "--n", "8,16", "--reps", "10", "--seed", "3", "--out", "first"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let o = brw(&["volume", "--config", "first/config.txt", "--out", "second"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let a = fs::read(dir.path().join("first/records.csv")).unwrap();
    let b = fs::read(dir.path().join("second/records.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn manifest_lists_file_digests() {
    let dir = tempfile::tempdir().unwrap();
    let o = brw(&["survival", "--out", "run"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "survival");
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["name"] == "survival.csv"));
    for f in files {
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn resistance_solve_reads_a_network() {
    let dir = tempfile::tempdir().unwrap();
    // unit square plus a doubled edge 0-3
    fs::write(dir.path().join("net.txt"), "4 5\n0 1 1\n1 2 1\n2 3 1\n0 3 1\n3 0 1\n").unwrap();
    let value = |o: &Output| -> f64 {
        let v: serde_json::Value = serde_json::from_str(&stdout(o)).unwrap();
        v["value"].as_f64().unwrap()
    };
    let o = brw(&["resistance-solve", "--graph", "net.txt", "--source", "0", "--target", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!((value(&o) - 6.0 / 7.0).abs() < 1e-9);
    // shorting 1 and 2: 0-1 in parallel with 0-3 (doubled) then 3-2
    fs::write(dir.path().join("sink.txt"), "1 2\n").unwrap();
    let o = brw(
        &["resistance-solve", "--graph", "net.txt", "--source", "0", "--short-set", "sink.txt"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!((value(&o) - 1.0 / (1.0 + 1.0 / 1.5)).abs() < 1e-9);
    let o = brw(&["resistance-solve", "--graph", "net.txt", "--source", "0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = brw(&["resistance-solve", "--graph", "net.txt", "--source", "0", "--target", "9"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_thread_count_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_brw"))
        .args(["survival"])
        .current_dir(dir.path())
        .env("BRW_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
