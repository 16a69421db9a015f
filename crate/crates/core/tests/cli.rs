use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tempoq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempoq")).args(args).env_remove("TEMPOQ_SEED").output().unwrap()
}

fn asset(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join(name).display().to_string()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_log_is_deterministic_and_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture("small_spec.json");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = tempoq(&["gen-log", "--spec", s(&spec), "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("trajectories: 10,"));
    }
    let golden = fs::read_to_string(fixture("small_log.csv")).unwrap();
    assert_eq!(fs::read_to_string(&a).unwrap(), golden);
    assert_eq!(fs::read_to_string(&b).unwrap(), golden);

    let c = dir.path().join("c.csv");
    assert!(tempoq(&["gen-log", "--spec", s(&spec), "--out", s(&c), "--seed", "43"]).status.success());
    assert_ne!(fs::read_to_string(&c).unwrap(), golden);
}

#[test]
fn gen_log_rejects_bad_specs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("log.csv");
    let no_seed = dir.path().join("no_seed.json");
    fs::write(&no_seed, r#"{"trajectory_count": 3}"#).unwrap();
    assert_eq!(tempoq(&["gen-log", "--spec", s(&no_seed), "--out", s(&out)]).status.code(), Some(1));

    let seeded = Command::new(env!("CARGO_BIN_EXE_tempoq"))
        .args(["gen-log", "--spec", s(&no_seed), "--out", s(&out)])
        .env("TEMPOQ_SEED", "5")
        .output()
        .unwrap();
    assert!(seeded.status.success());

    let zero_k = dir.path().join("zero_k.json");
    fs::write(&zero_k, r#"{"seed": 1, "density_factor": 0}"#).unwrap();
    assert_eq!(tempoq(&["gen-log", "--spec", s(&zero_k), "--out", s(&out)]).status.code(), Some(1));

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"seed": 1, "trajectories": 4}"#).unwrap();
    assert_eq!(tempoq(&["gen-log", "--spec", s(&unknown), "--out", s(&out)]).status.code(), Some(1));
}

#[test]
fn query_reports_the_worked_example() {
    let o = tempoq(&["query", "--model", &asset("zeta_model.json"), "--queries", &asset("zeta.tq"), "--now", "9"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v[0]["query"], "zeta");
    assert_eq!(v[0]["matches"][0]["lambda"], "[5,9]");
    assert_eq!(v[0]["matches"][0]["classification"], "definite");
}

#[test]
fn oracle_diff_agrees_with_engine() {
    let o = tempoq(&[
        "oracle",
        "--model",
        &asset("zeta_model.json"),
        "--queries",
        &asset("zeta.tq"),
        "--horizon",
        "9",
        "--diff",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)[0]["matches"][0]["lambda"], "[5,9]");
}

#[test]
fn oracle_expect_mismatch_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let expect = dir.path().join("expect.json");
    let run = |lambda: &str| {
        fs::write(&expect, format!(r#"{{"query":"zeta","matches":[{{"elements":[1],"lambda":"{lambda}"}}]}}"#))
            .unwrap();
        tempoq(&[
            "oracle",
            "--model",
            &asset("zeta_model.json"),
            "--queries",
            &asset("zeta.tq"),
            "--horizon",
            "9",
            "--expect",
            s(&expect),
        ])
    };
    assert_eq!(run("[5,9]").status.code(), Some(0));
    let bad = run("[5,8]");
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("mismatching"));
}

#[test]
fn oracle_horizon_before_latest_timestamp_fails() {
    let o = tempoq(&["oracle", "--model", &asset("zeta_model.json"), "--queries", &asset("zeta.tq"), "--horizon", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(tempoq(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tempoq(&["query", "--model", "x.json"]).status.code(), Some(1));
    assert_eq!(tempoq(&["--help"]).status.code(), Some(0));
}

#[test]
fn replay_writes_json_and_csv_reports() {
    let dir = tempfile::tempdir().unwrap();
    let log = fixture("small_log.csv");
    let mut ledgers = Vec::new();
    for variant in ["intempo", "intempo-plus"] {
        let report = dir.path().join(format!("{variant}.json"));
        let o = tempoq(&["replay", "--log", s(&log), "--variant", variant, "--no-timing", "--report", s(&report)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(json["config"]["variant"], variant);
        assert_eq!(json["config"]["kappa"], 3600);
        let csv = fs::read_to_string(report.with_extension("csv")).unwrap();
        assert_eq!(csv.lines().count() as u64, json["invocations"].as_u64().unwrap() + 1);
        ledgers.push(json["violations"].clone());
    }
    assert!(!ledgers[0].as_array().unwrap().is_empty());
    assert_eq!(ledgers[0], ledgers[1]);
}

#[test]
fn replay_rejects_malformed_logs() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.csv");
    fs::write(&log, "timestamp,patient_id,event\n10,P1,IV\n").unwrap();
    let o = tempoq(&["replay", "--log", s(&log)]);
    assert_eq!(o.status.code(), Some(1));
    fs::write(&log, "timestamp,patient_id,event\nten,P1,ER\n").unwrap();
    assert_eq!(tempoq(&["replay", "--log", s(&log)]).status.code(), Some(1));
}
