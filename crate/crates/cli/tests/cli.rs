use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_convtile"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &TempDir, name: &str, v: &Value) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn fixture(rel: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    p.to_str().unwrap().to_string()
}

/// The instance whose C1 volume works out to 200 words.
fn small_layer() -> Value {
    json!({ "kind": "cnn", "n": 1, "k": 4, "c": 2, "r": 1, "s": 1, "h": 4, "w": 4 })
}

fn tiny_machine() -> Value {
    json!({
        "name": "tiny",
        "cores": 2,
        "levels": [
            { "name": "L1", "capacity_words": 64 },
            { "name": "L2", "capacity_words": 512, "bw_to_inner": 16, "shared": true,
              "bw_to_inner_parallel": 24 },
            { "name": "Mem", "bw_to_inner": 2, "bw_to_inner_parallel": 3 }
        ]
    })
}

fn tiny_layer() -> Value {
    json!({ "kind": "cnn", "n": 1, "k": 8, "c": 8, "r": 3, "s": 3, "h": 6, "w": 6 })
}

#[test]
fn classes_catalog() {
    let out = run(&["classes"]);
    let v = stdout_json(&out);
    assert_eq!(v["count"], 8);
    assert_eq!(v["total_members"], 672);
    assert_eq!(v["classes"][0]["members"], 48);
    assert_eq!(v["classes"][4]["members"], 120);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("classes.json"));
}

#[test]
fn cost_of_explicit_tiles() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &small_layer());
    let out = run(&["cost", "-p", &p, "--capacity", "inf", "--class", "C1", "--tiles", "1,2,2,1,1,2,2"]);
    let v = stdout_json(&out);
    assert_eq!(v["cost"]["total"], 200.0);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("cost_c1.json"));

    // the same order spelled out as a permutation
    let v = stdout_json(&run(&[
        "cost", "-p", &p, "--capacity", "inf", "--perm", "kt,ct,rt,st,nt,ht,wt", "--tiles", "1,2,2,1,1,2,2",
    ]));
    assert_eq!(v["cost"]["total"], 200.0);
}

#[test]
fn whole_problem_tile_costs_each_tensor_once() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &small_layer());
    let v = stdout_json(&run(&["cost", "-p", &p, "--capacity", "inf", "--class", "C5", "--tiles", "1,4,2,1,1,4,4"]));
    let t = &v["cost"]["per_level"][0]["per_tensor"];
    assert_eq!(t["in"], 32.0);
    assert_eq!(t["ker"], 8.0);
    assert_eq!(t["out"], 128.0);
}

#[test]
fn capacity_violation_exits_two_with_the_constraint() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &small_layer());
    let out = run(&["cost", "-p", &p, "--capacity", "10", "--class", "C1", "--tiles", "1,2,2,1,1,2,2"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"], "infeasible");
    let text = v["violations"].to_string();
    assert!(text.contains("capacity"), "{text}");
}

#[test]
fn usage_and_input_errors_exit_one() {
    assert_eq!(run(&["optimize", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["cost", "-p", "/nonexistent.json", "--capacity", "8"]).status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["enumerate", "-p", bad.to_str().unwrap(), "--capacity", "8"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn optimize_is_byte_identical_across_runs_and_job_counts() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &tiny_layer());
    let m = write(&dir, "m.json", &tiny_machine());
    let args = ["optimize", "-p", &p, "-m", &m, "--seed", "1"];
    let a = run(&args);
    let b = run(&args);
    let mut one = vec!["--jobs", "1"];
    one.extend_from_slice(&args);
    let c = run(&one);
    let mut four = vec!["--jobs", "4"];
    four.extend_from_slice(&args);
    let d = run(&four);
    stdout_json(&a);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(a.stdout, d.stdout);
}

#[test]
fn stored_schedule_cost_is_reproduced() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &tiny_layer());
    let m = write(&dir, "m.json", &tiny_machine());
    for extra in [&[][..], &["--parallel"][..]] {
        let out_path = dir.path().join("s.json");
        let out_str = out_path.to_str().unwrap();
        let mut args = vec!["optimize", "-p", &p, "-m", &m, "-o", out_str];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
        for key in [
            "problem",
            "machine",
            "machine_digest",
            "mode",
            "parallel",
            "cores",
            "line_size_words",
            "class_per_level",
            "representative_permutations",
            "tiles",
            "parallel_chunks",
            "cost",
            "solver",
        ] {
            assert!(doc.get(key).is_some(), "missing {key}");
        }
        assert_eq!(doc["solver"]["wall_ms"], Value::Null);
        let v = stdout_json(&run(&["cost", "--schedule", out_str, "-m", &m]));
        assert_eq!(v["matches_stored"], true);
        assert_eq!(v["cost"], doc["cost"]);
    }
}

#[test]
fn too_many_cores_is_reported_as_infeasible_parallelism() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &json!({ "kind": "cnn", "n": 1, "k": 2, "c": 4, "r": 3, "s": 3, "h": 2, "w": 1 }));
    let m = write(&dir, "m.json", &tiny_machine());
    let out = run(&["optimize", "-p", &p, "-m", &m, "--cores", "64"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"], "infeasible_parallelism");
}

#[test]
fn enumerate_samples_are_reproducible_and_dominance_holds() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &small_layer());
    let args = ["enumerate", "-p", &p, "--capacity", "64", "--samples", "20", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    let v = stdout_json(&a);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(v["entries"].as_array().unwrap().len(), 20);

    let v = stdout_json(&run(&["enumerate", "-p", &p, "--capacity", "64", "--perms", "all"]));
    assert_eq!(v["dominance"]["holds"], true);
}

#[test]
fn empty_grid_and_over_budget_exit_two() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &small_layer());
    // nothing but the unit tile could fit, and it does not
    let out = run(&["enumerate", "-p", &p, "--capacity", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["enumerate", "-p", &p, "--perms", "all", "--max-evals", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"], "budget_exceeded");
}

#[test]
fn unbounded_cache_simulation_counts_distinct_elements() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &small_layer());
    let cfg = write(
        &dir,
        "c.json",
        &json!([{ "perm": "kt,ct,rt,st,nt,ht,wt",
                  "tiles": { "n": 1, "k": 2, "c": 2, "r": 1, "s": 1, "h": 2, "w": 2 } }]),
    );
    let v = stdout_json(&run(&["validate", "-p", &p, "--capacity", "inf", "--configs", &cfg]));
    let sim = &v["entries"][0]["sim"];
    // 2x4x4 inputs, 4x2 weights, 4x4x4 outputs
    assert_eq!(sim["in"]["misses"], 32);
    assert_eq!(sim["ker"]["misses"], 8);
    assert_eq!(sim["out"]["misses"], 64);
    assert_eq!(sim["out"]["writebacks"], 64);
}

#[test]
fn validate_from_enumerate_samples() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &json!({ "kind": "cnn", "n": 1, "k": 4, "c": 4, "r": 3, "s": 3, "h": 6, "w": 6 }));
    let e = dir.path().join("e.json");
    let o = run(&[
        "enumerate", "-p", &p, "--capacity", "96", "--samples", "30", "--seed", "3", "-o", e.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&run(&["validate", "-p", &p, "--from-enumerate", e.to_str().unwrap()]));
    assert_eq!(v["simulated"], 30);
    assert_eq!(v["entries"].as_array().unwrap().len(), 30);
}

#[test]
fn simulate_budget_refusal() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &small_layer());
    let out = run(&[
        "simulate", "-p", &p, "--perm", "kt,ct,rt,st,nt,ht,wt", "--tiles", "1,2,2,1,1,2,2", "--capacity", "64",
        "--budget", "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"], "budget_exceeded");
}

#[test]
fn fixtures_load() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.json");
    // a cheap command that parses both fixture kinds
    let o = run(&[
        "cost", "-p", &fixture("problems/R12.json"), "-m", &fixture("machines/i9-10980xe.json"), "--class", "C1",
        "--tiles", "1,1,1,1,1,1,1;1,1,1,1,1,1,1;1,1,1,1,1,1,1;1,1,1,1,1,1,1", "-o", out.to_str().unwrap(),
    ]);
    assert!(
        matches!(o.status.code(), Some(0) | Some(2)),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
