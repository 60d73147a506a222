use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn arbor(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arbor"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("summary on stdout")
}

fn write_assignment(dir: &Path) {
    std::fs::write(
        dir.join("g0.json"),
        r#"{"d": 3, "entries": {"o": [0,2,1], "o.0.1": [0,2,1], "o.0.2": [0,2,1]}}"#,
    )
    .unwrap();
    std::fs::write(
        dir.join("asg.json"),
        r#"{"d": 3, "generators": [{"portrait": "g0.json"}, {"haar_at": "o.1", "seed": 7}],
            "t": {"haar_at": "o", "seed": 9}}"#,
    )
    .unwrap();
}

/// File contents with the timestamp line removed.
fn without_header(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(1).collect::<Vec<_>>().join("\n")
}

#[test]
fn word_echoes_cyclic_reduction() {
    let dir = tempfile::tempdir().unwrap();
    write_assignment(dir.path());
    let out = arbor(&["word", "--word", "t g0 t^-1", "--assignment", "asg.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["summary"]["cyclic_reduction"], "g0");
    assert_eq!(doc["summary"]["class"]["kind"], "Elliptic");
}

#[test]
fn word_with_t_reports_radius_and_special_indices() {
    let dir = tempfile::tempdir().unwrap();
    write_assignment(dir.path());
    let out = arbor(
        &["word", "--word", "g0 t", "--assignment", "asg.json", "--depth", "6"],
        dir.path(),
    );
    assert!(out.status.success());
    let s = &stdout_json(&out)["summary"];
    let m = s["radius"]["m"].as_u64().unwrap();
    assert!(m >= 2);
    assert_eq!(s["sphere"]["m"].as_u64(), Some(m));
    for c in s["sphere"]["closed"].as_array().unwrap() {
        assert_eq!(c["trace"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, out: &str| {
        let o = arbor(
            &[
                "experiment", "gw", "--samples", "3000", "--depth", "8", "--seed", "3",
                "--survival-depths", "2,4", "--threads", threads, "--out", out,
            ],
            dir.path(),
        );
        assert!(o.status.success() || o.status.code() == Some(3));
        o
    };
    let a = run("1", "one");
    let b = run("4", "four");
    assert_eq!(a.stdout, b.stdout);
    for f in ["records.jsonl", "summary.csv"] {
        assert_eq!(
            without_header(&dir.path().join("one").join(f)),
            without_header(&dir.path().join("four").join(f))
        );
    }
    assert_eq!(
        std::fs::read(dir.path().join("one/summary.json")).unwrap(),
        std::fs::read(dir.path().join("four/summary.json")).unwrap()
    );
    let records = std::fs::read_to_string(dir.path().join("one/records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 3001);
    assert!(records.lines().next().unwrap().contains("generated_unix"));
}

#[test]
fn invalid_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["sample", "--d", "2"],
        vec!["experiment", "gw", "--samples", "0"],
        vec!["word", "--word", "g0 q"],
        vec!["word", "--word", "g0"],
        vec!["classify", "--targets", "o.7"],
        vec!["experiment", "haar-gof", "--config", "missing.json"],
    ] {
        let out = arbor(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn failed_pass_condition_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = arbor(&["experiment", "haar-gof", "--samples", "480"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout_json(&out)["summary"]["passed"], false);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"d": 4, "depth": 2, "samples": 5, "seed": 1, "targets": ["o", "o.2"]}"#,
    )
    .unwrap();
    let out = arbor(&["sample", "--config", "run.json", "--samples", "2"], dir.path());
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["settings"]["samples"], 2);
    assert_eq!(doc["settings"]["d"], 4);
    let records = doc["summary"]["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["portrait"]["d"], 4);
    assert_eq!(records[1]["target"], "o.2");
}

#[test]
fn classify_matches_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["classify", "--samples", "20", "--seed", "11", "--targets", "o,o.1,o.1.2"];
    let a = arbor(&args, dir.path());
    let b = arbor(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let kinds = &stdout_json(&a)["summary"]["kinds"];
    let total: u64 = kinds.as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 20);
}

#[test]
fn fixtree_of_portrait() {
    let dir = tempfile::tempdir().unwrap();
    write_assignment(dir.path());
    let out = arbor(&["fixtree", "--portrait", "g0.json", "--depth", "5"], dir.path());
    assert!(out.status.success());
    let s = &stdout_json(&out)["summary"];
    assert_eq!(s["elliptic"], 1);
    assert_eq!(s["survivors"], 0);
    assert_eq!(s["records"][0]["size"], 4);
}

#[test]
fn eta_verify_small_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    write_assignment(dir.path());
    let out = arbor(
        &[
            "experiment", "eta-verify", "--assignment", "asg.json", "--word", "t", "--word", "g0 t",
            "--samples", "5", "--seed", "2", "--out", "eta",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("eta/summary.json")).unwrap()).unwrap();
    assert_eq!(s["summary"]["words"].as_array().unwrap().len(), 2);
}
