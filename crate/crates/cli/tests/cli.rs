use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multigoal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const ENV: &str = r#"{
  "bounds": [0, 12, 0, 8],
  "obstacles": [
    {"shape": "disc", "center": [6, 4], "radius": 0.6},
    {"shape": "rect", "center": [6, 1.5], "half_extents": [0.3, 0.8]},
    {"shape": "disc", "center": [6.4, 4], "radius": 0.5}
  ],
  "traversability_regions": [
    {"shape": "disc", "center": [6, 4], "radius": 1.8, "value": 0.5}
  ],
  "base_traversability": 0.9,
  "truncation": 2.0,
  "resolution": 0.1
}"#;

const MISSION: &str = r#"{
  "version": 1,
  "start": [1.5, 1.5, 0.0],
  "tois": [
    {"id": "rock", "pose": [6, 4, 0], "pois": [[4.3, 4, 0], [7.9, 4, 3.14159], [6, 6.1, -1.5708]]},
    {"id": "far", "pose": [10.5, 6.5, 0], "pois": [[9.8, 6.2, 0.4]]}
  ]
}"#;

struct Site {
    dir: TempDir,
    map: PathBuf,
    mission: PathBuf,
}

fn site() -> Site {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("env.json");
    let map = dir.path().join("map.json");
    let mission = dir.path().join("mission.json");
    fs::write(&spec, ENV).unwrap();
    fs::write(&mission, MISSION).unwrap();
    let out = run(&["gen-env", "--spec", s(&spec), "--seed", "3", "--out", s(&map)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    Site { dir, map, mission }
}

#[test]
fn gen_env_is_deterministic() {
    let site = site();
    let again = site.dir.path().join("map2.json");
    let spec = site.dir.path().join("env.json");
    assert!(run(&["gen-env", "--spec", s(&spec), "--seed", "3", "--out", s(&again)]).status.success());
    assert_eq!(fs::read(&site.map).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn gen_env_names_missing_field() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("env.json");
    fs::write(&spec, ENV.replace(",\n  \"resolution\": 0.1", "")).unwrap();
    let out = run(&["gen-env", "--spec", s(&spec), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolution"));
}

#[test]
fn plan_writes_a_closed_tour() {
    let site = site();
    let plan_path = site.dir.path().join("plan.json");
    let out = run(&[
        "plan", "--map", s(&site.map), "--mission", s(&site.mission), "--out", s(&plan_path),
        "--max-vertices", "1500", "--seed", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(&plan_path).unwrap()).unwrap();
    let wps = plan["waypoints"].as_array().unwrap();
    assert_eq!(wps.first(), wps.last());
    assert_eq!(wps[0], serde_json::json!([1.5, 1.5, 0.0]));
    assert_eq!(plan["closed"], true);
    assert_eq!(plan["sequence"].as_array().unwrap().len(), 2);
    let sum: f64 = plan["segment_costs"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).sum();
    assert!((sum - plan["total_cost"].as_f64().unwrap()).abs() < 1e-9);

    // render the result
    let svg = site.dir.path().join("plan.svg");
    let out = run(&[
        "render", "--map", s(&site.map), "--mission", s(&site.mission), "--plan", s(&plan_path), "--out", s(&svg),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.contains("<polyline"));
    let svg2 = site.dir.path().join("plan2.svg");
    run(&[
        "render", "--map", s(&site.map), "--mission", s(&site.mission), "--plan", s(&plan_path), "--out", s(&svg2),
    ]);
    assert_eq!(text, fs::read_to_string(&svg2).unwrap());
}

#[test]
fn every_method_runs() {
    let site = site();
    for method in ["idp", "dp", "irba"] {
        let plan_path = site.dir.path().join(format!("{method}.json"));
        let out = run(&[
            "plan", "--map", s(&site.map), "--mission", s(&site.mission), "--out", s(&plan_path),
            "--method", method, "--max-vertices", "1000", "--tsp", "heuristic",
        ]);
        assert!(out.status.success(), "{method}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn invalid_poi_is_an_input_error() {
    let site = site();
    let bad = site.dir.path().join("bad.json");
    fs::write(&bad, MISSION.replace("[9.8, 6.2, 0.4]", "[6.0, 4.0, 0.4]")).unwrap();
    let out = run(&[
        "plan", "--map", s(&site.map), "--mission", s(&bad), "--out", s(&site.dir.path().join("p.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PoI 0 of ToI `far`"));
}

#[test]
fn unreachable_toi_is_a_planning_failure() {
    // a closed ring of obstacles around the second ToI's PoI
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("env.json");
    let map = dir.path().join("map.json");
    let mission = dir.path().join("mission.json");
    fs::write(
        &spec,
        r#"{"bounds": [0, 12, 0, 8],
            "obstacles": [
              {"shape": "rect", "center": [9, 6.5], "half_extents": [2.2, 0.2]},
              {"shape": "rect", "center": [9, 3.5], "half_extents": [2.2, 0.2]},
              {"shape": "rect", "center": [7, 5], "half_extents": [0.2, 1.7]},
              {"shape": "rect", "center": [11, 5], "half_extents": [0.2, 1.7]}
            ],
            "base_traversability": 0.9, "truncation": 2.0, "resolution": 0.1}"#,
    )
    .unwrap();
    fs::write(
        &mission,
        r#"{"version":1,"start":[2,2,0],"tois":[{"id":"caged","pose":[9,5,0],"pois":[[9,5,0]]}]}"#,
    )
    .unwrap();
    assert!(run(&["gen-env", "--spec", s(&spec), "--out", s(&map)]).status.success());
    let out = run(&[
        "plan", "--map", s(&map), "--mission", s(&mission), "--out", s(&dir.path().join("p.json")),
        "--max-vertices", "800", "--t-low", "0", "--t-high", "1",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("caged"));
}

#[test]
fn bench_reports_both_checker_settings() {
    let site = site();
    let report = site.dir.path().join("bench.json");
    let out = run(&[
        "bench", "--map", s(&site.map), "--mission", s(&site.mission), "--out", s(&report),
        "--method", "dp,idp", "--trials", "2", "--checker", "0.3:0.8", "--checker", "0:1",
        "--max-vertices", "800",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(table.lines().count(), 5);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["trials"].as_array().unwrap().len(), 8);
    let agg = v["aggregate"].as_array().unwrap();
    let tsdf = |i: usize| agg[i]["tsdf_queries_mean"].as_f64().unwrap();
    assert!(tsdf(1) < tsdf(3));
}

#[test]
fn bad_arguments_exit_with_input_code() {
    let site = site();
    let out = run(&[
        "plan", "--map", s(&site.map), "--mission", s(&site.mission), "--out", "x.json", "--footprint", "big",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "plan", "--map", s(&site.map), "--mission", s(&site.mission), "--out", "x.json", "--t-low", "0.9",
        "--t-high", "0.2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["plan", "--map", "/nonexistent/map.json", "--mission", s(&site.mission), "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
}
