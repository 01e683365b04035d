//! Exit-code contract and file outputs of the `evacrec` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture() -> PathBuf {
    fixtures().join("compiegne-flood.json")
}

fn evacrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evacrec")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// The fixture scenario after `edit`, written into `dir` with an absolute
/// graph path.
fn edited(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(fixture()).unwrap()).unwrap();
    v["graph"] = json!(fixtures().join("compiegne-roads.json"));
    edit(&mut v);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_the_fixture() {
    let o = evacrec(&["validate", s(&fixture())]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("valid: 4 mobile resources, 2 rescue points, 2 shelters"));
}

#[test]
fn validate_reports_one_line_per_violation() {
    let dir = tempfile::tempdir().unwrap();
    let p = edited(dir.path(), "dangling.json", |v| {
        v["knowledge"]["mobile_resources"][0]["position"] = json!({ "shelter": "sh-missing" });
    });
    let o = evacrec(&["validate", s(&p)]);
    assert_eq!(code(&o), 2);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1, "{out}");
    assert!(out.contains("sh-missing"));
}

#[test]
fn validate_fails_with_1_on_unparseable_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.json");
    std::fs::write(&p, "{ not json").unwrap();
    assert_eq!(code(&evacrec(&["validate", s(&p)])), 1);
    assert_eq!(code(&evacrec(&["validate", "/no/such/file.json"])), 1);
}

#[test]
fn solve_writes_the_plan_and_exits_0_on_full_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let o = evacrec(&["solve", s(&fixture()), "--output", s(&plan)]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(v["status"], "full_coverage");
    assert_eq!(v["assignments"].as_array().unwrap().len(), 3);
    let out = stdout(&o);
    assert!(out.contains("mr-alice-minibus-1") && out.contains("ETA"));
}

#[test]
fn solve_exits_3_when_the_fleet_is_short() {
    let dir = tempfile::tempdir().unwrap();
    let p = edited(dir.path(), "short.json", |v| {
        v["knowledge"]["rescue_points"][0]["evacuees"] = json!(30);
    });
    let o = evacrec(&["solve", s(&p)]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("partial_coverage"));
}

#[test]
fn solve_exits_1_on_unwritable_output_or_invalid_scenario() {
    let o = evacrec(&["solve", s(&fixture()), "--output", "/no/such/dir/plan.json"]);
    assert_eq!(code(&o), 1);
    let dir = tempfile::tempdir().unwrap();
    let p = edited(dir.path(), "bad.json", |v| {
        v["knowledge"]["rescue_points"][0]["priority"] = json!(9);
    });
    assert_eq!(code(&evacrec(&["solve", s(&p)])), 1);
}

#[test]
fn makespan_flag_is_recorded_in_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let o = evacrec(&["solve", s(&fixture()), "--makespan", "--output", s(&plan)]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(v["time_objective"], "makespan");
}

#[test]
fn precomputed_matrix_gives_identical_plan_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (m, a, b) = (dir.path().join("m.json"), dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(code(&evacrec(&["matrix", s(&fixture()), "--output", s(&m)])), 0);
    assert_eq!(code(&evacrec(&["solve", s(&fixture()), "--output", s(&a)])), 0);
    assert_eq!(code(&evacrec(&["solve", s(&fixture()), "--matrix", s(&m), "--output", s(&b)])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn stale_matrix_is_refused_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    assert_eq!(code(&evacrec(&["matrix", s(&fixture()), "--output", s(&m)])), 0);
    let moved = edited(dir.path(), "moved.json", |v| {
        v["knowledge"]["rescue_points"][1]["position"] = json!([49.4250, 2.8300]);
    });
    let o = evacrec(&["solve", s(&moved), "--matrix", s(&m)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("stale"));
}

#[test]
fn matrix_of_an_empty_scenario_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let p = edited(dir.path(), "empty.json", |v| {
        for key in ["mobile_resources", "rescue_points", "shelters"] {
            v["knowledge"][key] = json!([]);
        }
        v["knowledge"]["crisis"]["compatible_terrains"] = json!({});
    });
    let m = dir.path().join("m.json");
    assert_eq!(code(&evacrec(&["matrix", s(&p), "--output", s(&m)])), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(v["to_rescue_points"]["origins"], json!([]));
    assert_eq!(v["to_shelters"]["destinations"], json!([]));
}

#[test]
fn oracle_agrees_on_the_fixture_and_refuses_large_fleets() {
    let o = evacrec(&["oracle", s(&fixture())]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("match"));

    let dir = tempfile::tempdir().unwrap();
    let p = edited(dir.path(), "large.json", |v| {
        let k = &mut v["knowledge"];
        for i in 0..3 {
            k["persons"].as_array_mut().unwrap().push(json!({
                "id": format!("extra{i}"), "role": "human_resource", "licenses": ["B"]
            }));
            k["vehicles"].as_array_mut().unwrap().push(json!({
                "id": format!("car-x{i}"), "category": "car", "seats": 5,
                "required_license": "B", "terrain": "land"
            }));
            k["mobile_resources"].as_array_mut().unwrap().push(json!({
                "id": format!("mr-extra{i}-car-x{i}"), "driver": format!("extra{i}"),
                "vehicle": format!("car-x{i}"), "position": [49.42, 2.82], "available": true
            }));
        }
    });
    assert_eq!(code(&evacrec(&["validate", s(&p)])), 0);
    assert_eq!(code(&evacrec(&["oracle", s(&p)])), 5);
}

#[test]
fn random_oracle_batch_reports_matches() {
    let o = evacrec(&["oracle", "--random", "25", "--seed", "42"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "25/25 matches");
}

#[test]
fn commands_are_deterministic() {
    let a = evacrec(&["oracle", "--random", "5", "--seed", "7"]);
    let b = evacrec(&["oracle", "--random", "5", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let a = evacrec(&["solve", s(&fixture())]);
    let b = evacrec(&["solve", s(&fixture())]);
    assert_eq!(a.stdout, b.stdout);
}
