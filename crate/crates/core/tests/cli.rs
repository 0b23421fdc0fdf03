use std::path::Path;
use std::process::{Command, Output};

fn badflow(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_badflow")).args(args).arg("--out").arg(out).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn field_info_reports_the_discriminant() {
    let dir = tempfile::tempdir().unwrap();
    let o = badflow(dir.path(), &["--field-D", "7", "field", "info"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("degree: 2"));
    assert!(s.contains("discriminant D_K: -7"), "{s}");
}

#[test]
fn game_run_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let o = badflow(dir.path(), &["game", "run", "--adversary", "greedy", "--target", "0.5,-0.5", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("audit: ok"));
    let t = dir.path().join("transcript.json");
    let o = Command::new(env!("CARGO_BIN_EXE_badflow")).args(["game", "replay"]).arg(&t).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("audit: ok"));
}

#[test]
fn survey_csv_has_one_row_per_level_and_eps() {
    let dir = tempfile::tempdir().unwrap();
    let o = badflow(dir.path(), &["dim", "survey", "--eps", "0.05,0.3", "--levels", "3:5"]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("survey.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next(), Some("k,N_k,eps,Hmax"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("3,48,"), "{}", rows[0]);
}

#[test]
fn config_file_is_honoured_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"eps": "0.15", "levels": "3:4"}"#).unwrap();
    let o = badflow(dir.path(), &["dim", "survey", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("survey.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    std::fs::write(&cfg, r#"{"epsilon": 0.15}"#).unwrap();
    let o = badflow(dir.path(), &["dim", "survey", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(badflow(dir.path(), &["frobnicate"]).status.code(), Some(64));
    assert_eq!(badflow(dir.path(), &["dim", "survey", "--levels", "6:3"]).status.code(), Some(2));
    assert_eq!(badflow(dir.path(), &["--field-D", "5", "field", "info"]).status.code(), Some(0));
    assert_eq!(badflow(dir.path(), &["--field-poly", "1,0,1,0,1,0,1", "--weights", "1/2,1/2", "bad", "constant"]).status.code(), Some(2));
    assert_eq!(badflow(dir.path(), &["--beta", "0.5", "game", "run"]).status.code(), Some(2));
}

#[test]
fn orbit_profile_classifies_the_witness_as_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let o = badflow(dir.path(), &["orbit", "profile", "--horizon", "10", "--steps", "51"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verdict.json")).unwrap()).unwrap();
    assert_eq!(v["verdict"]["verdict"], "bounded");
    assert_eq!(v["config"]["horizon"], 10.0);
}
