use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rai_cli::{bundled, run, Scenario, ScenarioKind};
use serde_json::Value;

fn rai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rai")).args(args).output().expect("binary runs")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("golden")
}

fn write_temp(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn error_line(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {text}");
    serde_json::from_str(lines[0]).expect("machine-readable error")
}

/// Numeric leaves compare within 1e-9 (absolute or relative); everything else exactly.
fn close(a: &Value, b: &Value, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())) {
                Ok(())
            } else {
                Err(format!("{path}: {x} vs {y}"))
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            x.iter().zip(y).enumerate().try_for_each(|(i, (p, q))| close(p, q, &format!("{path}[{i}]")))
        }
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => x.iter().try_for_each(|(k, v)| {
            let w = y.get(k).ok_or_else(|| format!("{path}.{k} missing"))?;
            close(v, w, &format!("{path}.{k}"))
        }),
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} vs {b}")),
    }
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(dir.path(), "bad.json", "{\"schema_version\": 1, \"name\": ");
    let out = rai(&["run", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "parse");
}

#[test]
fn unknown_kind_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"schema_version":1,"name":"x","kind":"simulate_swarm","parameters":{}}"#;
    let path = write_temp(dir.path(), "k.json", text);
    let out = rai(&["run", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "unknown_kind");
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"schema_version":2,"name":"x","kind":"simulate_hk","parameters":{}}"#, "schema"),
        (r#"{"schema_version":1,"name":"x","kind":"simulate_hk","parameters":{"x0":[0,1]}}"#, "schema"),
        (
            r#"{"schema_version":1,"name":"x","kind":"simulate_hk","parameters":{"x0":[0],"epsilon":1,"max_steps":3,"extra":1}}"#,
            "schema",
        ),
        (r#"{"schema_version":1,"name":"a b","kind":"simulate_hk","parameters":{}}"#, "schema"),
        (
            r#"{"schema_version":1,"name":"x","kind":"simulate_hk","parameters":{"x0":[0,1],"epsilon":-1,"max_steps":3}}"#,
            "invalid_input",
        ),
        (
            r#"{"schema_version":1,"name":"x","kind":"analyze_matrix","parameters":{"matrix":[[0.5,0.6],[0,1]]}}"#,
            "invalid_input",
        ),
    ];
    for (i, (text, code)) in cases.iter().enumerate() {
        let path = write_temp(dir.path(), &format!("s{i}.json"), text);
        let out = rai(&["run", &path]);
        assert_eq!(out.status.code(), Some(2), "case {i}");
        assert_eq!(error_line(&out)["error"], *code, "case {i}");
    }
}

#[test]
fn missing_scenario_and_wrong_subcommand_exit_2() {
    let out = rai(&["run", "no_such_scenario"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "not_found");
    let out = rai(&["solve", "french_fig1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "schema");
}

#[test]
fn french_fig1_reaches_root_opinion() {
    let s = bundled::get("french_fig1").unwrap();
    let root = s.parameters["x0"][0].as_f64().unwrap();
    let out = rai(&["simulate", "french_fig1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = &v["result"]["classification"];
    assert_eq!(c["consensus"], true);
    assert!((c["consensus_value"].as_f64().unwrap() - root).abs() < 1e-9);
}

#[test]
fn counterexample_eq21_oscillates_with_exit_3() {
    let out = rai(&["simulate", "counterexample_eq21"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let status = v["result"]["classification"]["status"].as_array().unwrap();
    assert!(status.iter().all(|s| s["status"] == "oscillating"));
    assert_eq!(v["result"]["disturbance_totals"], serde_json::json!([0.0, 0.0, 0.0]));
}

#[test]
fn list_covers_catalog_and_validates() {
    let out = rai(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).lines().count() >= 14);
    for required in [
        "french_fig1",
        "static_sia_family",
        "quasi_strong_rai_oscillation",
        "counterexample_eq21",
        "delay_2agent_oscillation",
        "gossip_silence_ring",
        "hk_pure",
        "hk_truth_seekers",
        "altafini_balanced",
        "altafini_unbalanced",
        "solve_linear_nedic",
        "solve_linear_morse",
        "solve_linear_tempo",
        "substochastic_stability_grid",
    ] {
        assert!(bundled::get(required).is_some(), "{required} missing");
    }
    let out = rai(&["list", "--format", "json"]);
    let catalog: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(catalog.len() >= 14);
    for entry in catalog {
        let s = Scenario::parse(&entry.to_string()).expect("catalog entry validates");
        assert!(ScenarioKind::ALL.contains(&s.kind));
        assert_eq!(Scenario::parse(&s.to_json()).unwrap(), s);
    }
}

#[test]
fn every_bundled_scenario_runs_under_ten_seconds() {
    for s in bundled::catalog() {
        let t = Instant::now();
        let out = rai(&["run", &s.name]);
        assert!(matches!(out.status.code(), Some(0 | 3)), "{}: {:?}", s.name, out.status);
        assert!(t.elapsed() < Duration::from_secs(10), "{} took {:?}", s.name, t.elapsed());
    }
}

#[test]
fn artifacts_are_byte_reproducible() {
    for name in ["gossip_silence_ring", "altafini_balanced", "solve_linear_morse"] {
        let mut bytes = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let d = dir.path().to_str().unwrap();
            let out = rai(&["run", name, "--out-dir", d]);
            assert!(out.status.success());
            let csv = fs::read(dir.path().join(format!("{name}.trajectory.csv"))).unwrap();
            let verdict = fs::read(dir.path().join(format!("{name}.verdict.json"))).unwrap();
            assert_eq!(verdict, out.stdout);
            bytes.push((csv, verdict));
        }
        assert_eq!(bytes[0], bytes[1], "{name}");
    }
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let a = rai(&["run", "gossip_silence_ring"]);
    let b = rai(&["run", "gossip_silence_ring", "--seed", "8"]);
    let va: Value = serde_json::from_slice(&a.stdout).unwrap();
    let vb: Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(vb["seed"], 8);
    assert_ne!(va["result"]["final_state"], vb["result"]["final_state"]);
}

#[test]
fn json_artifact_and_output_names() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = bundled::get("hk_pure").unwrap();
    s.outputs.trajectory = Some("traj.json".into());
    s.outputs.verdict = Some("v.json".into());
    let path = write_temp(dir.path(), "hk.json", &s.to_json());
    let out_dir = dir.path().join("out");
    let out = rai(&["simulate", &path, "--out-dir", out_dir.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let record: Value = serde_json::from_slice(&fs::read(out_dir.join("traj.json")).unwrap()).unwrap();
    assert!(record.is_object());
    assert!(out_dir.join("v.json").is_file());
}

#[test]
fn analyze_accepts_bare_graph_files() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write_temp(dir.path(), "ring.txt", "# nodes 3\n0 1 1\n1 2 1\n2 0 1\n");
    let out = rai(&["analyze", "--graph", &edges]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["is_strong"], true);
    assert_eq!(v["result"]["periods"], serde_json::json!([3]));
    let m = write_temp(dir.path(), "m.json", "[[0.5,0.4],[0.3,0.6]]");
    let out = rai(&["analyze", "--matrix", &m]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["stable_by_reachability"], true);
}

#[test]
fn goldens_match() {
    for s in bundled::catalog() {
        let golden: Value =
            serde_json::from_str(&fs::read_to_string(golden_dir().join(format!("{}.json", s.name))).unwrap()).unwrap();
        let outcome = run(&s, s.seed).unwrap();
        assert_eq!(golden["exit_code"], outcome.exit_code(), "{}", s.name);
        if let Err(e) = close(&outcome.verdict, &golden["verdict"], &s.name) {
            panic!("golden mismatch: {e}");
        }
    }
}
